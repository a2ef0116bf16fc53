#include "mvbridge/tensor.hpp"

#include <bit>
#include <cmath>
#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mvbridge/rng.hpp"

#include "json.hpp"

namespace mvbridge {

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (std::int64_t d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor shape entries must be positive, got " + shape_to_string(shape));
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  data_.resize(static_cast<std::size_t>(shape_numel(shape_)));
}

Tensor::Tensor(std::vector<std::int64_t> shape, TensorStorage data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                                shape_to_string(shape_));
}

Tensor::Tensor(std::vector<std::int64_t> shape, std::initializer_list<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (shape_numel(shape_) != static_cast<std::int64_t>(data_.size()))
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                                shape_to_string(shape_));
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<std::int64_t> shape, double value) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = value;
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::uniform(std::vector<std::int64_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

Tensor Tensor::normal(std::vector<std::int64_t> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = stddev * rng.normal();
  return t;
}

double& Tensor::at(std::initializer_list<std::int64_t> idx) {
  std::int64_t off = 0;
  std::size_t axis = 0;
  for (std::int64_t i : idx) off = off * shape_[axis++] + i;
  return data_[static_cast<std::size_t>(off)];
}

double Tensor::at(std::initializer_list<std::int64_t> idx) const {
  return const_cast<Tensor*>(this)->at(idx);
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

namespace {

static_assert(std::endian::native == std::endian::little, "payload format is little-endian");

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  nlohmann::json header;
  header["shape"] = t.shape();
  header["dtype"] = "f64";
  os << header.dump() << "\n";
  os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("tensor payload: missing header line");
  nlohmann::json header = nlohmann::json::parse(line);
  if (header.at("dtype").get<std::string>() != "f64")
    throw std::runtime_error("tensor payload: unsupported dtype " + header.at("dtype").get<std::string>());
  std::vector<std::int64_t> shape = header.at("shape").get<std::vector<std::int64_t>>();
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!is) throw std::runtime_error("tensor payload: truncated data section");
  return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_tensor(os, t);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_tensor(is);
}

}  // namespace mvbridge
