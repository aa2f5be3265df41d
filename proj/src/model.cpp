#include "dsrcnn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dsrcnn {
namespace {

template <class ModelT, class Visit>
void visit_parameters(ModelT& m, Visit&& visit) {
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const std::string block = "block" + std::to_string(b + 1);
    for (std::size_t r = 0; r < m.blocks[b].size(); ++r) {
      auto& layer = m.blocks[b][r];
      const std::string prefix = block + ".rcl" + std::to_string(r + 1);
      visit(prefix + ".ff_kernel", layer.feed_forward.kernel, static_cast<int>(b));
      visit(prefix + ".ff_bias", *layer.feed_forward.bias, static_cast<int>(b));
      visit(prefix + ".rec_kernel", layer.recurrent.kernel, static_cast<int>(b));
    }
  }
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    const std::string side = "side" + std::to_string(b + 1);
    auto& head = m.side_heads[b];
    visit(side + ".score_kernel", head.score.kernel, static_cast<int>(b));
    visit(side + ".score_bias", *head.score.bias, static_cast<int>(b));
    if (head.upsample) visit(side + ".upsample_kernel", head.upsample->kernel, static_cast<int>(b));
  }
  visit(std::string("fusion.kernel"), m.fusion.kernel, -1);
  visit(std::string("fusion.bias"), *m.fusion.bias, -1);
}

Tensor uniform_kernel(Shape shape, Rng& rng) {
  const double bound = std::sqrt(3.0 / static_cast<double>(shape.c * shape.h * shape.w));
  Tensor k(shape);
  for (double& v : k.data()) v = rng.uniform(-bound, bound);
  return k;
}

void require_image(const Model& model, const Tensor& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != model.config.input_channels) {
    throw ShapeError("forward: expected image (1, " + std::to_string(model.config.input_channels) +
                     ", h, w), got " + s.str());
  }
  if (s.h < kMinImageSide || s.w < kMinImageSide) {
    throw ShapeError("forward: image " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                     " is smaller than the 16x16 minimum");
  }
}

// --- weight file -----------------------------------------------------------

constexpr char kMagic[8] = {'D', 'S', 'R', 'C', 'N', 'N', 'W', '\0'};
constexpr std::uint32_t kVersion = 1;

class ByteWriter {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const char* p, std::size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::string& str() const { return buf_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw WeightFileError(source_ + ": truncated weight file (needed " + std::to_string(n) +
                            " more bytes at offset " + std::to_string(pos_) + ")");
    }
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

struct ArrayRecord {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct WeightFile {
  ModelConfig config;
  std::vector<ArrayRecord> arrays;
};

WeightFile read_weight_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError(path.string() + ": cannot open weight file");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(std::move(data), path.string());

  if (r.bytes(sizeof kMagic) != std::string(kMagic, sizeof kMagic)) {
    throw WeightFileError(path.string() + ": not a weight file (bad magic)");
  }
  if (const auto v = r.u32(); v != kVersion) {
    throw WeightFileError(path.string() + ": unsupported weight file version " + std::to_string(v));
  }
  WeightFile f;
  f.config.input_channels = r.u32();
  for (auto& c : f.config.block_channels) c = r.u32();
  for (auto& c : f.config.convs_per_block) c = r.u32();
  f.config.rcl_steps = r.u32();
  f.config.kernel_side = r.u32();
  f.config.dropout_ratio = r.f64();
  f.config.seed = r.u64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    ArrayRecord rec;
    rec.name = r.bytes(r.u32());
    rec.shape = Shape{r.u32(), r.u32(), r.u32(), r.u32()};
    if (rec.shape.numel() == 0) {
      throw WeightFileError(path.string() + ": array " + rec.name + " has an empty shape");
    }
    rec.values.resize(rec.shape.numel());
    for (double& v : rec.values) v = r.f64();
    f.arrays.push_back(std::move(rec));
  }
  if (!r.done()) throw WeightFileError(path.string() + ": trailing bytes after last array");
  return f;
}

std::string block_label(int block) {
  return block < 0 ? std::string("fusion head") : "block " + std::to_string(block + 1);
}

Model model_from_file(const WeightFile& f, const ModelConfig& config, const std::string& source) {
  Rng scratch(0);
  Model model = build_model(config, scratch);
  auto params = parameters(model);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamRef& p = params[i];
    if (i >= f.arrays.size()) {
      throw WeightFileError(source + ": " + block_label(p.block) + ": missing array " + p.name);
    }
    const ArrayRecord& rec = f.arrays[i];
    if (rec.name != p.name || rec.shape != p.tensor->shape()) {
      throw WeightFileError(source + ": " + block_label(p.block) + ": expected " + p.name + " " +
                            p.tensor->shape().str() + ", file has " + rec.name + " " +
                            rec.shape.str());
    }
    *p.tensor = Tensor(rec.shape, rec.values);
  }
  if (f.arrays.size() != params.size()) {
    throw WeightFileError(source + ": file holds " + std::to_string(f.arrays.size()) +
                          " arrays, config expects " + std::to_string(params.size()));
  }
  return model;
}

}  // namespace

void validate(const ModelConfig& config) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
  if (config.input_channels == 0) fail("input_channels must be positive");
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    if (config.block_channels[b] == 0) fail("block " + std::to_string(b + 1) + " has zero channels");
    if (config.convs_per_block[b] == 0) fail("block " + std::to_string(b + 1) + " has no layers");
  }
  if (config.kernel_side == 0 || config.kernel_side % 2 == 0) fail("kernel_side must be odd");
  if (!(config.dropout_ratio >= 0.0 && config.dropout_ratio < 1.0)) fail("dropout_ratio must lie in [0, 1)");
}

std::vector<ParamRef> parameters(Model& model) {
  std::vector<ParamRef> out;
  visit_parameters(model, [&](std::string name, Tensor& t, int block) {
    out.push_back({std::move(name), &t, block});
  });
  return out;
}

std::vector<ConstParamRef> parameters(const Model& model) {
  std::vector<ConstParamRef> out;
  visit_parameters(model, [&](std::string name, const Tensor& t, int block) {
    out.push_back({std::move(name), &t, block});
  });
  return out;
}

Model build_model(const ModelConfig& config, Rng& rng) {
  validate(config);
  Model m;
  m.config = config;
  std::size_t in_c = config.input_channels;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (std::size_t r = 0; r < config.convs_per_block[b]; ++r) {
      m.blocks[b].push_back(make_rcl(in_c, config.block_channels[b], config.kernel_side, config.rcl_steps, rng));
      in_c = config.block_channels[b];
    }
  }
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    SideHead& head = m.side_heads[b];
    head.score.kernel = uniform_kernel(Shape{1, config.block_channels[b], 1, 1}, rng);
    head.score.bias = Tensor(Shape{1, 1, 1, 1});
    if (side_stride(b) > 1) {
      ConvParams up;
      up.kernel = bilinear_kernel(side_stride(b));
      up.stride = {side_stride(b), side_stride(b)};
      head.upsample = std::move(up);
    }
  }
  m.fusion.kernel = Tensor(Shape{1, kNumBlocks, 1, 1}, 1.0 / static_cast<double>(kNumBlocks));
  m.fusion.bias = Tensor(Shape{1, 1, 1, 1});
  return m;
}

ForwardVars record_forward(Graph& g, const Model& model, const Tensor& image, Mode mode, Rng& rng) {
  require_image(model, image);
  ForwardVars fv;
  fv.image = g.input(image, "image");
  for (const ConstParamRef& p : parameters(model)) fv.params.push_back(g.parameter(p.name, *p.tensor));

  const Extent2 out_size{image.shape().h, image.shape().w};
  std::size_t next = 0;
  std::array<std::vector<RclVars>, kNumBlocks> trunk;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (std::size_t r = 0; r < model.blocks[b].size(); ++r, next += 3) {
      trunk[b].push_back(RclVars{fv.params[next], fv.params[next + 1], fv.params[next + 2]});
    }
  }

  Var x = fv.image;
  for (std::size_t b = 0; b < kNumBlocks; ++b) {
    for (std::size_t r = 0; r < model.blocks[b].size(); ++r) {
      x = rcl_unfold(g, x, trunk[b][r], model.blocks[b][r]);
    }
    x = dropout(g, x, model.config.dropout_ratio, mode, rng);

    const SideHead& head = model.side_heads[b];
    const Var score_kernel = fv.params[next++];
    const Var score_bias = fv.params[next++];
    Var score = conv2d(g, x, score_kernel, score_bias, {1, 1}, {0, 0});
    if (head.upsample) {
      score = transposed_conv2d(g, score, fv.params[next++], std::nullopt, head.upsample->stride, out_size);
    }
    fv.side_scores[b] = score;
    fv.side_maps[b] = sigmoid(g, score);
    if (b + 1 < kNumBlocks) x = max_pool2d(g, x);
  }

  const Var stacked = concat_channels(g, fv.side_scores);
  fv.fused_score = conv2d(g, stacked, fv.params[next], fv.params[next + 1], {1, 1}, {0, 0});
  fv.fused_map = sigmoid(g, fv.fused_score);
  return fv;
}

ForwardResult forward(const Model& model, const Tensor& image, Mode mode, Rng& rng) {
  Graph g;
  const ForwardVars fv = record_forward(g, model, image, mode, rng);
  ForwardResult r;
  for (std::size_t b = 0; b < kNumBlocks; ++b) r.side_maps[b] = to_map(g.value(fv.side_maps[b]));
  r.fused_map = to_map(g.value(fv.fused_map));
  return r;
}

void save_weights(const Model& model, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  const ModelConfig& c = model.config;
  w.u32(static_cast<std::uint32_t>(c.input_channels));
  for (auto v : c.block_channels) w.u32(static_cast<std::uint32_t>(v));
  for (auto v : c.convs_per_block) w.u32(static_cast<std::uint32_t>(v));
  w.u32(static_cast<std::uint32_t>(c.rcl_steps));
  w.u32(static_cast<std::uint32_t>(c.kernel_side));
  w.f64(c.dropout_ratio);
  w.u64(c.seed);
  const auto params = parameters(model);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const ConstParamRef& p : params) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name.data(), p.name.size());
    const Shape& s = p.tensor->shape();
    for (auto d : {s.n, s.c, s.h, s.w}) w.u32(static_cast<std::uint32_t>(d));
    for (double v : p.tensor->data()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightFileError(path.string() + ": cannot open for writing");
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw WeightFileError(path.string() + ": write failed");
}

Model load_weights(const std::filesystem::path& path) {
  const WeightFile f = read_weight_file(path);
  try {
    validate(f.config);
  } catch (const std::invalid_argument& e) {
    throw WeightFileError(path.string() + ": " + e.what());
  }
  return model_from_file(f, f.config, path.string());
}

Model load_weights(const std::filesystem::path& path, const ModelConfig& expected) {
  const WeightFile f = read_weight_file(path);
  return model_from_file(f, expected, path.string());
}

}  // namespace dsrcnn
