#include "driftbench/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "driftbench/io.hpp"
#include "json.hpp"

namespace driftbench {

using nlohmann::json;

namespace {

constexpr char kMagic[] = "DBMODEL1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

struct TensorView {
  const char* name;
  const float* data;
  std::size_t rows, cols;  // cols = 1 for vectors
};

std::vector<TensorView> tensor_views(const Model<float>& m) {
  std::vector<TensorView> v;
  auto mat = [&](const char* name, const Mat<float>& M) {
    v.push_back({name, M.a.data(), static_cast<std::size_t>(M.rows),
                 static_cast<std::size_t>(M.cols)});
  };
  auto vec = [&](const char* name, const std::vector<float>& x) {
    v.push_back({name, x.data(), x.size(), 1});
  };
  mat("E", m.enc.E);
  mat("W1", m.enc.W1);
  vec("b1", m.enc.b1);
  mat("W2", m.enc.W2);
  vec("b2", m.enc.b2);
  if (!m.head.offsets.empty()) mat("offsets", m.head.offsets);
  if (!m.head.time_embed.empty()) mat("time_embed", m.head.time_embed);
  if (!m.head.w.empty()) vec("w", m.head.w);
  if (!m.head.time_W.empty()) mat("time_W", m.head.time_W);
  if (!m.head.time_b.empty()) vec("time_b", m.head.time_b);
  return v;
}

}  // namespace

void save_model(const Model<float>& model, const std::filesystem::path& path) {
  auto views = tensor_views(model);
  json tensors = json::array();
  std::size_t offset = 0;
  for (const auto& t : views) {
    tensors.push_back({{"name", t.name},
                       {"rows", t.rows},
                       {"cols", t.cols},
                       {"offset", offset}});
    offset += t.rows * t.cols;
  }

  json header{
      {"dtype", "f32"},
      {"encoder",
       {{"hash_buckets", model.cfg.hash_buckets},
        {"embed_dim", model.cfg.embed_dim},
        {"hidden_dim", model.cfg.hidden_dim},
        {"n_classes", model.cfg.n_classes},
        {"use_bigrams", model.cfg.use_bigrams},
        {"mlm_epochs", model.cfg.mlm_epochs},
        {"mask_prob", model.cfg.mask_prob}}},
      {"temporal",
       {{"variant", variant_name(model.head.variant)},
        {"lambda_prior", static_cast<double>(model.head.lambda_prior)},
        {"prior_k", static_cast<double>(model.head.prior_k)},
        {"lambda_grl", static_cast<double>(model.head.lambda_grl)},
        {"binning_mode",
         model.head.binning.mode == TimeBinning::Mode::EqualSpan ? "equal_span"
                                                                 : "equal_count"},
        {"boundaries", model.head.binning.boundaries}}},
      {"tensors", tensors}};

  std::string head_str = header.dump();
  std::string out;
  out.reserve(kMagicLen + 4 + head_str.size() + offset * 4);
  out.append(kMagic, kMagicLen);
  std::uint32_t len = static_cast<std::uint32_t>(head_str.size());
  char lenbuf[4] = {static_cast<char>(len & 0xff), static_cast<char>((len >> 8) & 0xff),
                    static_cast<char>((len >> 16) & 0xff),
                    static_cast<char>((len >> 24) & 0xff)};
  out.append(lenbuf, 4);
  out += head_str;
  for (const auto& t : views) {
    // Raw IEEE-754 bytes. This code assumes a little-endian host, which the
    // magic version would guard if that ever changes.
    out.append(reinterpret_cast<const char*>(t.data), t.rows * t.cols * sizeof(float));
  }
  write_file_atomic(path, out);
}

Model<float> load_model(const std::filesystem::path& path) {
  std::string blob = read_file(path);
  if (blob.size() < kMagicLen + 4 || blob.compare(0, kMagicLen, kMagic) != 0)
    throw std::runtime_error(path.string() + ": not a model checkpoint");
  std::uint32_t len = 0;
  for (int i = 3; i >= 0; --i)
    len = (len << 8) | static_cast<unsigned char>(blob[kMagicLen + i]);
  if (blob.size() < kMagicLen + 4 + len)
    throw std::runtime_error(path.string() + ": truncated header");
  json header = json::parse(blob.substr(kMagicLen + 4, len));
  if (header.at("dtype").get<std::string>() != "f32")
    throw std::runtime_error(path.string() + ": unsupported dtype");

  Model<float> m;
  const json& e = header.at("encoder");
  m.cfg.hash_buckets = e.at("hash_buckets").get<int>();
  m.cfg.embed_dim = e.at("embed_dim").get<int>();
  m.cfg.hidden_dim = e.at("hidden_dim").get<int>();
  m.cfg.n_classes = e.at("n_classes").get<int>();
  m.cfg.use_bigrams = e.at("use_bigrams").get<bool>();
  m.cfg.mlm_epochs = e.at("mlm_epochs").get<int>();
  m.cfg.mask_prob = e.at("mask_prob").get<double>();

  const json& t = header.at("temporal");
  m.head.variant = variant_from(t.at("variant").get<std::string>());
  m.head.lambda_prior = static_cast<float>(t.at("lambda_prior").get<double>());
  m.head.prior_k = static_cast<float>(t.at("prior_k").get<double>());
  m.head.lambda_grl = static_cast<float>(t.at("lambda_grl").get<double>());
  m.head.binning.mode = t.at("binning_mode").get<std::string>() == "equal_span"
                            ? TimeBinning::Mode::EqualSpan
                            : TimeBinning::Mode::EqualCount;
  m.head.binning.boundaries = t.at("boundaries").get<std::vector<std::int64_t>>();

  const char* base = blob.data() + kMagicLen + 4 + len;
  const std::size_t avail = (blob.size() - kMagicLen - 4 - len) / sizeof(float);
  auto read_mat = [&](const json& spec, Mat<float>& M) {
    std::size_t rows = spec.at("rows").get<std::size_t>();
    std::size_t cols = spec.at("cols").get<std::size_t>();
    std::size_t off = spec.at("offset").get<std::size_t>();
    if (off + rows * cols > avail)
      throw std::runtime_error(path.string() + ": truncated tensor data");
    M = Mat<float>(static_cast<int>(rows), static_cast<int>(cols));
    std::memcpy(M.a.data(), base + off * sizeof(float), rows * cols * sizeof(float));
  };
  auto read_vec = [&](const json& spec, std::vector<float>& x) {
    Mat<float> M;
    read_mat(spec, M);
    x = std::move(M.a);
  };

  for (const auto& spec : header.at("tensors")) {
    std::string name = spec.at("name").get<std::string>();
    if (name == "E") read_mat(spec, m.enc.E);
    else if (name == "W1") read_mat(spec, m.enc.W1);
    else if (name == "b1") read_vec(spec, m.enc.b1);
    else if (name == "W2") read_mat(spec, m.enc.W2);
    else if (name == "b2") read_vec(spec, m.enc.b2);
    else if (name == "offsets") read_mat(spec, m.head.offsets);
    else if (name == "time_embed") read_mat(spec, m.head.time_embed);
    else if (name == "w") read_vec(spec, m.head.w);
    else if (name == "time_W") read_mat(spec, m.head.time_W);
    else if (name == "time_b") read_vec(spec, m.head.time_b);
    else throw std::runtime_error(path.string() + ": unknown tensor \"" + name + "\"");
  }
  return m;
}

}  // namespace driftbench
