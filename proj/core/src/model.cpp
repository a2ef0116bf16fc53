#include "mvbridge/model.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "mvbridge/rng.hpp"

#include "json.hpp"

namespace mvbridge {

namespace fs = std::filesystem;

void ModelConfig::validate() const {
  if (patch <= 0 || token_dim <= 0 || heads <= 0 || layers <= 0 || mlp_dim <= 0 || time_embed_dim <= 0)
    throw std::invalid_argument("model config: all dimensions must be positive");
  if (token_dim % heads != 0) throw std::invalid_argument("model config: token_dim must be divisible by heads");
  if (time_embed_dim % 2 != 0) throw std::invalid_argument("model config: time_embed_dim must be even");
}

namespace {

struct ParamBuilder {
  ModelParams params;
  Rng rng;

  explicit ParamBuilder(std::uint64_t seed) : rng(mix_seed(seed, 0x9a4a15)) {}

  void weight(const std::string& name, std::int64_t fan_in, std::int64_t fan_out) {
    params.names.push_back(name);
    params.tensors.push_back(Tensor::uniform({fan_in, fan_out}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
  }
  void vec(const std::string& name, std::int64_t n, double fill) {
    params.names.push_back(name);
    params.tensors.push_back(Tensor::full({n}, fill));
  }
  void table(const std::string& name, std::int64_t rows, std::int64_t cols, double bound) {
    params.names.push_back(name);
    params.tensors.push_back(Tensor::uniform({rows, cols}, bound, rng));
  }
};

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParamBuilder b(seed);
  b.params.config = config;

  const int d = config.token_dim;
  const int c = config.latent_channels();

  b.weight("embed.w", 2 * c, d);
  b.vec("embed.b", d, 0.0);
  b.table("role.table", 2, d, 1.0 / std::sqrt(static_cast<double>(d)));
  b.weight("time.w", config.time_embed_dim, d);
  b.vec("time.b", d, 0.0);

  for (int l = 0; l < config.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    b.vec(p + "ln1.g", d, 1.0);
    b.vec(p + "ln1.b", d, 0.0);
    for (const char* w : {"wq", "wk", "wv", "wo"}) b.weight(p + "attn." + w, d, d);
    for (const char* bb : {"bq", "bk", "bv", "bo"}) b.vec(p + "attn." + bb, d, 0.0);
    b.vec(p + "ln2.g", d, 1.0);
    b.vec(p + "ln2.b", d, 0.0);
    b.weight(p + "mlp.w1", d, config.mlp_dim);
    b.vec(p + "mlp.b1", config.mlp_dim, 0.0);
    b.weight(p + "mlp.w2", config.mlp_dim, d);
    b.vec(p + "mlp.b2", d, 0.0);
  }
  b.vec("final.ln.g", d, 1.0);
  b.vec("final.ln.b", d, 0.0);
  b.weight("head.w", d, c);
  b.vec("head.b", c, 0.0);

  return std::move(b.params);
}

std::int64_t ModelParams::total_size() const {
  std::int64_t n = 0;
  for (const Tensor& t : tensors) n += t.size();
  return n;
}

Tensor& ModelParams::find(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return tensors[i];
  throw std::invalid_argument("unknown parameter " + name);
}

const Tensor& ModelParams::find(const std::string& name) const {
  return const_cast<ModelParams*>(this)->find(name);
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(total_size()));
  for (const Tensor& t : tensors) flat.insert(flat.end(), t.data(), t.data() + t.size());
  return flat;
}

void ModelParams::unflatten(const std::vector<double>& flat) {
  if (static_cast<std::int64_t>(flat.size()) != total_size())
    throw std::invalid_argument("unflatten: size mismatch");
  std::size_t off = 0;
  for (Tensor& t : tensors) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + static_cast<std::size_t>(t.size())), t.data());
    off += static_cast<std::size_t>(t.size());
  }
}

Tensor positional_encoding(std::int64_t grid_h, std::int64_t grid_w, int dim) {
  // Half the channels encode y, half encode x; depends on (y, x) only.
  Tensor pe({grid_h * grid_w, dim});
  const int half = dim / 2;
  for (std::int64_t y = 0; y < grid_h; ++y)
    for (std::int64_t x = 0; x < grid_w; ++x) {
      double* row = pe.data() + (y * grid_w + x) * dim;
      for (int i = 0; i < half; ++i) {
        const double freq = std::pow(10000.0, -2.0 * (i / 2) / static_cast<double>(half));
        const double arg = (i % 2 == 0) ? std::sin(y * freq) : std::cos(y * freq);
        row[i] = arg;
      }
      for (int i = half; i < dim; ++i) {
        const int j = i - half;
        const double freq = std::pow(10000.0, -2.0 * (j / 2) / static_cast<double>(dim - half));
        row[i] = (j % 2 == 0) ? std::sin(x * freq) : std::cos(x * freq);
      }
    }
  return pe;
}

Tensor time_features(double t, int dim) {
  Tensor f = Tensor::zeros({dim});
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / half);
    f[2 * i] = std::sin(t * freq * 100.0);
    f[2 * i + 1] = std::cos(t * freq * 100.0);
  }
  return f;
}

namespace {

struct ParamLookup {
  const ModelParams& params;
  const std::vector<Tape::Id>& ids;

  Tape::Id operator()(const std::string& name) const {
    for (std::size_t i = 0; i < params.names.size(); ++i)
      if (params.names[i] == name) return ids[i];
    throw std::invalid_argument("unknown parameter " + name);
  }
};

// layer_norm followed by learned affine
Tape::Id ln_affine(Tape& tape, Tape::Id x, Tape::Id gamma, Tape::Id beta) {
  return tape.add(tape.mul(tape.layer_norm(x), gamma), beta);
}

}  // namespace

std::vector<Tape::Id> velocity_forward(Tape& tape, const ModelParams& params, const std::vector<Tape::Id>& param_ids,
                                       const std::vector<Tape::Id>& z_t, const std::vector<Tape::Id>& z_cond,
                                       const std::vector<Tape::Id>& refs, double t, const ForwardHooks& hooks) {
  if (z_t.empty()) throw std::invalid_argument("velocity_forward: need at least one degraded view");
  if (z_t.size() != z_cond.size())
    throw std::invalid_argument("velocity_forward: z_t and conditioning view counts differ");
  if (param_ids.size() != params.tensors.size())
    throw std::invalid_argument("velocity_forward: param id count mismatch");

  const ModelConfig& cfg = params.config;
  const int d = cfg.token_dim;
  const int c = cfg.latent_channels();
  const ParamLookup P{params, param_ids};

  // copy: node storage may reallocate as ops are pushed
  const std::vector<std::int64_t> shape0 = tape.value(z_t[0]).shape();
  if (shape0.size() != 3 || shape0[2] != c)
    throw std::invalid_argument("velocity_forward: latent shape " + tape.value(z_t[0]).shape_str() +
                                " does not match config channels " + std::to_string(c));
  const std::int64_t gh = shape0[0], gw = shape0[1], hw = gh * gw;

  const Tape::Id pos = tape.constant(positional_encoding(gh, gw, d));
  const Tape::Id tfeat = tape.constant(time_features(t, cfg.time_embed_dim));
  const Tape::Id temb = tape.add(tape.matmul(tape.reshape(tfeat, {1, cfg.time_embed_dim}), P("time.w")),
                                 P("time.b"));  // (1, d)
  const Tape::Id temb_row = tape.reshape(temb, {d});

  auto embed_view = [&](Tape::Id z, Tape::Id cond, int role) -> Tape::Id {
    for (Tape::Id id : {z, cond})
      if (tape.value(id).shape() != shape0)
        throw std::invalid_argument("velocity_forward: view latent shape " + tape.value(id).shape_str() +
                                    " differs from " + shape_to_string(shape0));
    const Tape::Id flat_z = tape.reshape(z, {hw, c});
    const Tape::Id flat_c = tape.reshape(cond, {hw, c});
    const Tape::Id pair = tape.concat({flat_z, flat_c}, 1);
    Tape::Id tok = tape.add(tape.matmul(pair, P("embed.w")), P("embed.b"));
    tok = tape.add(tok, pos);
    const Tape::Id role_row = tape.reshape(tape.slice(P("role.table"), 0, role, role + 1), {d});
    tok = tape.add(tok, role_row);
    tok = tape.add(tok, temb_row);
    return tok;
  };

  std::vector<Tape::Id> blocks;
  for (std::size_t v = 0; v < z_t.size(); ++v) blocks.push_back(embed_view(z_t[v], z_cond[v], 0));
  for (Tape::Id r : refs) blocks.push_back(embed_view(r, r, 1));

  Tape::Id x = blocks.size() == 1 ? blocks[0] : tape.concat(blocks, 0);
  const std::int64_t n_deg = static_cast<std::int64_t>(z_t.size());
  const std::int64_t total = tape.value(x).shape()[0];

  // Optional test hook: silence reference keys with a large negative score
  // bias. exp() underflows to exactly 0, so softmax matches a run without
  // the reference tokens bit for bit.
  Tape::Id score_bias = -1;
  if (hooks.mask_reference_attention && !refs.empty()) {
    Tensor bias = Tensor::zeros({total, total});
    for (std::int64_t q = 0; q < total; ++q)
      for (std::int64_t k = n_deg * hw; k < total; ++k) bias.at({q, k}) = -1e9;
    score_bias = tape.constant(std::move(bias));
  }

  const int dh = d / cfg.heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    const Tape::Id h1 = ln_affine(tape, x, P(p + "ln1.g"), P(p + "ln1.b"));

    auto heads_of = [&](const char* w, const char* b) -> Tape::Id {
      const Tape::Id proj = tape.add(tape.matmul(h1, P(p + "attn." + std::string(w))), P(p + "attn." + std::string(b)));
      return tape.transpose(tape.reshape(proj, {total, cfg.heads, dh}), {1, 0, 2});  // (H, T, dh)
    };
    // scale q up front: cheaper than scaling the (H, T, T) score tensor
    const Tape::Id q = tape.scale(heads_of("wq", "bq"), inv_sqrt_dh);
    const Tape::Id k = heads_of("wk", "bk");
    const Tape::Id v = heads_of("wv", "bv");

    Tape::Id scores = tape.matmul(q, tape.transpose(k, {0, 2, 1}));  // (H, T, T)
    if (score_bias >= 0) scores = tape.add(scores, score_bias);
    const Tape::Id attn = tape.softmax(scores);
    const Tape::Id ctx = tape.matmul(attn, v);                                          // (H, T, dh)
    const Tape::Id merged = tape.reshape(tape.transpose(ctx, {1, 0, 2}), {total, d});   // (T, d)
    const Tape::Id out = tape.add(tape.matmul(merged, P(p + "attn.wo")), P(p + "attn.bo"));
    x = tape.add(x, out);

    const Tape::Id h2 = ln_affine(tape, x, P(p + "ln2.g"), P(p + "ln2.b"));
    const Tape::Id mid = tape.gelu(tape.add(tape.matmul(h2, P(p + "mlp.w1")), P(p + "mlp.b1")));
    const Tape::Id mlp_out = tape.add(tape.matmul(mid, P(p + "mlp.w2")), P(p + "mlp.b2"));
    x = tape.add(x, mlp_out);
  }

  const Tape::Id final_x = ln_affine(tape, x, P("final.ln.g"), P("final.ln.b"));

  std::vector<Tape::Id> velocities;
  for (std::int64_t vi = 0; vi < n_deg; ++vi) {
    const Tape::Id rows = tape.slice(final_x, 0, vi * hw, (vi + 1) * hw);
    const Tape::Id vel = tape.add(tape.matmul(rows, P("head.w")), P("head.b"));
    velocities.push_back(tape.reshape(vel, {gh, gw, c}));
  }
  return velocities;
}

std::vector<Tensor> velocity_eval(const ModelParams& params, const std::vector<Tensor>& z_t,
                                  const std::vector<Tensor>& z_cond, const std::vector<Tensor>& refs, double t,
                                  const ForwardHooks& hooks) {
  Tape tape;
  std::vector<Tape::Id> param_ids;
  param_ids.reserve(params.tensors.size());
  for (const Tensor& p : params.tensors) param_ids.push_back(tape.constant(p));
  std::vector<Tape::Id> zt_ids, zc_ids, ref_ids;
  for (const Tensor& z : z_t) zt_ids.push_back(tape.constant(z));
  for (const Tensor& z : z_cond) zc_ids.push_back(tape.constant(z));
  for (const Tensor& z : refs) ref_ids.push_back(tape.constant(z));
  const auto out_ids = velocity_forward(tape, params, param_ids, zt_ids, zc_ids, ref_ids, t, hooks);
  std::vector<Tensor> out;
  out.reserve(out_ids.size());
  for (Tape::Id id : out_ids) out.push_back(tape.value(id));
  return out;
}

void save_params(const std::string& dir, const ModelParams& params) {
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["config"] = {{"patch", params.config.patch},       {"token_dim", params.config.token_dim},
                    {"heads", params.config.heads},       {"layers", params.config.layers},
                    {"mlp_dim", params.config.mlp_dim},   {"time_embed_dim", params.config.time_embed_dim},
                    {"max_views", params.config.max_views}};
  meta["names"] = params.names;
  std::ofstream os(fs::path(dir) / "model.json");
  os << meta.dump(2) << "\n";

  std::ofstream ts(fs::path(dir) / "params.bin", std::ios::binary);
  if (!ts) throw std::runtime_error("cannot write params.bin in " + dir);
  for (const Tensor& t : params.tensors) write_tensor(ts, t);
}

ModelParams load_params(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "model.json");
  if (!is) throw std::runtime_error("cannot open model.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(is);
  ModelParams params;
  const auto& c = meta.at("config");
  params.config.patch = c.at("patch").get<int>();
  params.config.token_dim = c.at("token_dim").get<int>();
  params.config.heads = c.at("heads").get<int>();
  params.config.layers = c.at("layers").get<int>();
  params.config.mlp_dim = c.at("mlp_dim").get<int>();
  params.config.time_embed_dim = c.at("time_embed_dim").get<int>();
  params.config.max_views = c.at("max_views").get<int>();
  params.names = meta.at("names").get<std::vector<std::string>>();

  std::ifstream ts(fs::path(dir) / "params.bin", std::ios::binary);
  if (!ts) throw std::runtime_error("cannot open params.bin in " + dir);
  for (std::size_t i = 0; i < params.names.size(); ++i) params.tensors.push_back(read_tensor(ts));
  return params;
}

}  // namespace mvbridge
