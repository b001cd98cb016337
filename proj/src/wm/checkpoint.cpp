#include "anwm/wm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "anwm/errors.hpp"

namespace anwm::wm {
namespace {

constexpr char kMagic[8] = {'A', 'N', 'W', 'M', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(std::string data, std::string file) : data_(std::move(data)), file_(std::move(file)) {}

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n, const char* field) {
    need(n, field);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float f32(const char* field) { return std::bit_cast<float>(u32(field)); }
  bool done() const { return pos_ == data_.size(); }
  const std::string& file() const { return file_; }

 private:
  void need(std::size_t n, const char* field) {
    if (data_.size() - pos_ < n) throw FormatError(field, file_ + ": truncated checkpoint");
  }
  std::string data_, file_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const WorldModel<float>& model, const TrainConfig& train,
                     long steps_done) {
  nlohmann::json cfg = {{"model", nlohmann::json::parse(to_json(model.config()))},
                        {"train", nlohmann::json::parse(to_json(train))},
                        {"steps_done", steps_done}};
  const std::string text = cfg.dump(2);
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  const auto& p = model.params();
  put_u32(out, static_cast<std::uint32_t>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(p.name(i).size()));
    out += p.name(i);
    put_u32(out, static_cast<std::uint32_t>(p[i].rows()));
    put_u32(out, static_cast<std::uint32_t>(p[i].cols()));
    for (long r = 0; r < p[i].rows(); ++r)
      for (long c = 0; c < p[i].cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(p[i](r, c)));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw InvalidArgument("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open checkpoint " + path.string());
  Reader in(std::string(std::istreambuf_iterator<char>(f), {}), path.string());
  if (in.bytes(sizeof kMagic, "magic") != std::string(kMagic, sizeof kMagic))
    throw FormatError("magic", in.file() + ": not a checkpoint");
  const auto version = in.u32("version");
  if (version != kCheckpointVersion)
    throw VersionError(in.file() + ": checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  const auto text = in.bytes(in.u32("config_length"), "config");
  Checkpoint ck;
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(text);
    ck.train = train_config_from_json(cfg.at("train").dump());
    ck.steps_done = cfg.at("steps_done").get<long>();
    ck.model = std::make_unique<WorldModel<float>>(model_config_from_json(cfg.at("model").dump()), 0);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("config", in.file() + ": " + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError("config", in.file() + ": " + e.what());
  }
  auto& p = ck.model->params();
  const auto count = in.u32("tensor_count");
  if (count != p.size())
    throw FormatError("tensor_count", in.file() + ": expected " + std::to_string(p.size()) + " tensors, found " +
                                          std::to_string(count));
  for (std::size_t i = 0; i < count; ++i) {
    const auto name = in.bytes(in.u32("tensor_name"), "tensor_name");
    const auto idx = p.find(name);
    if (!idx) throw FormatError("tensor_name", in.file() + ": unknown tensor " + name);
    const long rows = in.u32("tensor_shape"), cols = in.u32("tensor_shape");
    auto& m = p[*idx];
    if (rows != m.rows() || cols != m.cols()) throw FormatError("tensor_shape", in.file() + ": shape mismatch for " + name);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) m(r, c) = in.f32("tensor_data");
    if (!m.allFinite()) throw FormatError("tensor_data", in.file() + ": non-finite values in " + name);
  }
  if (!in.done()) throw FormatError("trailing", in.file() + ": trailing bytes after tensors");
  return ck;
}

}  // namespace anwm::wm
