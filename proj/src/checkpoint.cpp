#include "excirec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace excirec {

namespace {

using nlohmann::json;
using nn::LayerKind;
using nn::LayerSpec;
using nn::Padding;

constexpr char kMagic[4] = {'E', 'X', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::relu: return "relu";
    case LayerKind::avgpool: return "avgpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

void read_exact(std::istream& in, char* dst, std::streamsize count,
                std::uint64_t offset, const char* what) {
  in.read(dst, count);
  if (in.gcount() != count) {
    std::ostringstream msg;
    msg << "truncated checkpoint file while reading " << what << " at offset "
        << (offset + static_cast<std::uint64_t>(std::max<std::streamsize>(
                         in.gcount(), 0)));
    throw format_error(msg.str());
  }
}

}  // namespace

json network_config_to_json(const nn::NetworkConfig& cfg) {
  json j;
  j["input"] = {cfg.input.c, cfg.input.h, cfg.input.w};
  j["layers"] = json::array();
  for (const auto& spec : cfg.layers) {
    json l;
    l["kind"] = kind_name(spec.kind);
    switch (spec.kind) {
      case LayerKind::conv:
        l["kernel"] = spec.kernel;
        l["channels"] = spec.channels;
        l["stride"] = spec.stride;
        l["padding"] = spec.padding == Padding::same ? "same" : "valid";
        break;
      case LayerKind::avgpool: l["width"] = spec.width; break;
      case LayerKind::dense: l["units"] = spec.units; break;
      default: break;
    }
    j["layers"].push_back(l);
  }
  return j;
}

nn::NetworkConfig network_config_from_json(const json& j) {
  nn::NetworkConfig cfg;
  try {
    const auto& input = j.at("input");
    if (!input.is_array() || input.size() != 3)
      throw config_error("network input shape must be [c, h, w]");
    cfg.input =
        nn::Shape{input[0].get<int>(), input[1].get<int>(), input[2].get<int>()};
    for (const auto& l : j.at("layers")) {
      const std::string kind = l.at("kind").get<std::string>();
      LayerSpec spec;
      if (kind == "conv") {
        spec = nn::conv_spec(l.at("kernel").get<int>(),
                             l.at("channels").get<int>(),
                             l.value("stride", 1));
        const std::string padding = l.value("padding", "same");
        if (padding == "same") {
          spec.padding = Padding::same;
        } else if (padding == "valid") {
          spec.padding = Padding::valid;
        } else {
          throw config_error("unknown padding '" + padding + "'");
        }
      } else if (kind == "relu") {
        spec = nn::relu_spec();
      } else if (kind == "avgpool") {
        spec = nn::avgpool_spec(l.at("width").get<int>());
      } else if (kind == "flatten") {
        spec = nn::flatten_spec();
      } else if (kind == "dense") {
        spec = nn::dense_spec(l.at("units").get<int>());
      } else {
        throw config_error("unknown layer kind '" + kind + "'");
      }
      cfg.layers.push_back(spec);
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("bad network config: ") + e.what());
  }
  return cfg;
}

void save_checkpoint(const std::string& path, nn::Network<float>& net) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw format_error("cannot open " + path + " for writing");
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), 4);
  const std::string cfg = network_config_to_json(net.config()).dump();
  const std::uint64_t cfg_len = cfg.size();
  out.write(reinterpret_cast<const char*>(&cfg_len), 8);
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto params = net.params();
  const std::uint32_t n_tensors = static_cast<std::uint32_t>(params.size());
  out.write(reinterpret_cast<const char*>(&n_tensors), 4);
  for (auto* p : params) {
    const std::uint32_t rows = static_cast<std::uint32_t>(p->value.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(p->value.cols());
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(sizeof(float)) * p->value.size());
  }
  if (!out) throw format_error("short write to " + path);
}

nn::Network<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot open " + path);

  char magic[4];
  read_exact(in, magic, 4, 0, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw format_error("bad magic at offset 0 in " + path);
  std::uint32_t version = 0;
  read_exact(in, reinterpret_cast<char*>(&version), 4, 4, "version");
  if (version != kVersion) {
    std::ostringstream msg;
    msg << "unsupported checkpoint version " << version << " at offset 4";
    throw format_error(msg.str());
  }
  std::uint64_t cfg_len = 0;
  read_exact(in, reinterpret_cast<char*>(&cfg_len), 8, 8, "config length");
  if (cfg_len > (1u << 20))
    throw format_error("implausible config length at offset 8");
  std::string cfg_text(cfg_len, '\0');
  std::uint64_t offset = 16;
  read_exact(in, cfg_text.data(), static_cast<std::streamsize>(cfg_len), offset,
             "config");
  offset += cfg_len;

  json cfg_json;
  try {
    cfg_json = json::parse(cfg_text);
  } catch (const json::exception& e) {
    throw format_error(std::string("unparseable checkpoint config: ") +
                       e.what());
  }
  nn::Network<float> net(network_config_from_json(cfg_json));

  std::uint32_t n_tensors = 0;
  read_exact(in, reinterpret_cast<char*>(&n_tensors), 4, offset,
             "tensor count");
  offset += 4;
  const auto params = net.params();
  if (n_tensors != params.size()) {
    std::ostringstream msg;
    msg << "checkpoint holds " << n_tensors << " tensors but the config needs "
        << params.size();
    throw format_error(msg.str());
  }
  for (auto* p : params) {
    std::uint32_t dims[2];
    read_exact(in, reinterpret_cast<char*>(dims), 8, offset, "tensor header");
    offset += 8;
    if (static_cast<Eigen::Index>(dims[0]) != p->value.rows() ||
        static_cast<Eigen::Index>(dims[1]) != p->value.cols()) {
      std::ostringstream msg;
      msg << "tensor shape " << dims[0] << "x" << dims[1]
          << " does not match the config at offset " << (offset - 8);
      throw format_error(msg.str());
    }
    read_exact(in, reinterpret_cast<char*>(p->value.data()),
               static_cast<std::streamsize>(sizeof(float)) * p->value.size(),
               offset, "tensor data");
    offset += sizeof(float) * static_cast<std::uint64_t>(p->value.size());
  }
  return net;
}

void save_history_csv(const std::string& path, const nn::TrainHistory& hist) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + path + " for writing");
  out << "epoch,train_loss,val_loss\n";
  for (size_t i = 0; i < hist.train_loss.size(); ++i) {
    out << i << ',' << std::setprecision(10) << hist.train_loss[i] << ','
        << hist.val_loss[i] << '\n';
  }
  if (!out) throw format_error("short write to " + path);
}

}  // namespace excirec
