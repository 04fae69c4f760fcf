#include "diip/conv_denoiser.hpp"

#include <charconv>
#include <cstdio>
#include <memory>

namespace diip {

ConvDenoiser::ConvDenoiser(nn::UNet net, NoiseSchedule sched, ImageShape shape)
    : net_(std::move(net)), sched_(std::move(sched)), shape_(shape) {
  if (shape_.channels != net_.config().in_channels) {
    throw Error("denoiser: channel count does not match the network");
  }
  if (shape_.height % 4 != 0 || shape_.width % 4 != 0) {
    throw Error("denoiser: image size must be divisible by 4");
  }
}

void ConvDenoiser::check(const Image& z_t, int t) const {
  if (shape_of(z_t) != shape_) throw Error("denoiser: input shape mismatch");
  if (t < 1 || t > sched_.steps()) throw Error("denoiser: timestep out of range");
}

Image ConvDenoiser::eval(const Image& z_t, int t) const {
  check(z_t, t);
  return nn::to_image(net_.forward(nn::from_image(z_t), t));
}

EpsWithPullback ConvDenoiser::eval_with_pullback(const Image& z_t, int t) const {
  check(z_t, t);
  auto cache = std::make_shared<nn::UNet::Cache>();
  Image eps = nn::to_image(net_.forward(nn::from_image(z_t), t, cache.get()));
  const nn::UNet* net = &net_;
  return {std::move(eps), [net, cache](const Image& v) {
            return nn::to_image(net->backward(*cache, nn::from_image(v)));
          }};
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_num(const std::string& s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(std::string("checkpoint: bad value for ") + what + ": '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(std::string("checkpoint: bad value for ") + what + ": '" + s + "'");
}

}  // namespace

Checkpoint to_checkpoint(const ConvDenoiser& den, const TrainingMeta& meta) {
  Checkpoint ck;
  const auto& cfg = den.net().config();
  const auto& s = den.schedule();
  ck.meta["schedule.steps"] = std::to_string(s.steps());
  ck.meta["schedule.beta1"] = fmt_double(s.beta1());
  ck.meta["schedule.betaT"] = fmt_double(s.betaT());
  ck.meta["image.height"] = std::to_string(den.shape().height);
  ck.meta["image.width"] = std::to_string(den.shape().width);
  ck.meta["image.channels"] = std::to_string(den.shape().channels);
  ck.meta["arch"] = "unet";
  ck.meta["arch.c1"] = std::to_string(cfg.c1);
  ck.meta["arch.c2"] = std::to_string(cfg.c2);
  ck.meta["arch.c3"] = std::to_string(cfg.c3);
  ck.meta["arch.embed_dim"] = std::to_string(cfg.embed_dim);
  ck.meta["arch.embed_hidden"] = std::to_string(cfg.embed_hidden);
  ck.meta["train.dataset"] = meta.dataset;
  ck.meta["train.iterations"] = std::to_string(meta.iterations);
  ck.meta["train.seed"] = std::to_string(meta.seed);
  for (const auto& p : den.net().params().all()) {
    CheckpointArray a{p.name, p.shape, {}};
    a.data.reserve(p.numel());
    for (double v : p.value) a.data.push_back(static_cast<float>(v));
    ck.arrays.push_back(std::move(a));
  }
  return ck;
}

ConvDenoiser from_checkpoint(const Checkpoint& ck) {
  if (ck.meta_at("arch") != "unet") throw Error("checkpoint: unknown architecture");
  nn::UNetConfig cfg;
  ImageShape shape;
  shape.height = parse_num<int>(ck.meta_at("image.height"), "image.height");
  shape.width = parse_num<int>(ck.meta_at("image.width"), "image.width");
  shape.channels = parse_num<int>(ck.meta_at("image.channels"), "image.channels");
  cfg.in_channels = cfg.out_channels = shape.channels;
  cfg.c1 = parse_num<int>(ck.meta_at("arch.c1"), "arch.c1");
  cfg.c2 = parse_num<int>(ck.meta_at("arch.c2"), "arch.c2");
  cfg.c3 = parse_num<int>(ck.meta_at("arch.c3"), "arch.c3");
  cfg.embed_dim = parse_num<int>(ck.meta_at("arch.embed_dim"), "arch.embed_dim");
  cfg.embed_hidden = parse_num<int>(ck.meta_at("arch.embed_hidden"), "arch.embed_hidden");
  NoiseSchedule sched(parse_num<int>(ck.meta_at("schedule.steps"), "schedule.steps"),
                      parse_double(ck.meta_at("schedule.beta1"), "schedule.beta1"),
                      parse_double(ck.meta_at("schedule.betaT"), "schedule.betaT"));
  nn::UNet net(cfg);
  auto& params = net.params().all();
  if (params.size() != ck.arrays.size()) throw Error("checkpoint: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& a = ck.arrays[i];
    if (a.name != params[i].name || a.dims != params[i].shape) {
      throw Error("checkpoint: array '" + a.name + "' does not match the architecture");
    }
    for (std::size_t j = 0; j < a.data.size(); ++j) params[i].value[j] = a.data[j];
  }
  return ConvDenoiser(std::move(net), std::move(sched), shape);
}

TrainingMeta training_meta(const Checkpoint& ck) {
  TrainingMeta m;
  m.dataset = ck.meta_at("train.dataset");
  m.iterations = parse_num<long>(ck.meta_at("train.iterations"), "train.iterations");
  m.seed = parse_num<std::uint64_t>(ck.meta_at("train.seed"), "train.seed");
  return m;
}

void save_denoiser(const std::filesystem::path& path, const ConvDenoiser& den,
                   const TrainingMeta& meta) {
  save_checkpoint(path, to_checkpoint(den, meta));
}

ConvDenoiser load_denoiser(const std::filesystem::path& path) {
  return from_checkpoint(load_checkpoint(path));
}

void quantize_to_float(nn::ParamStore& ps) {
  for (auto& p : ps.all())
    for (double& v : p.value) v = static_cast<float>(v);
}

}  // namespace diip
