#include "uavfl/lsnet/checkpoint.hpp"

#include <bit>
#include <fstream>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

namespace uavfl::lsnet {

namespace {
constexpr char kMagic[] = "UAVFL-CKPT-1\n";

nlohmann::json config_to_json(const LSNetConfig& c) {
  return {{"stage_channels", c.stage_channels}, {"stage_depths", c.stage_depths},
          {"head_width", c.head_width},         {"num_classes", c.num_classes},
          {"droppath_max", c.droppath_max},     {"input_channels", c.input_channels},
          {"expansion", c.expansion},           {"input_size", c.input_size},
          {"gn_groups", c.gn_groups}};
}

LSNetConfig config_from_json(const nlohmann::json& j) {
  LSNetConfig c;
  j.at("stage_channels").get_to(c.stage_channels);
  j.at("stage_depths").get_to(c.stage_depths);
  c.head_width = j.at("head_width");
  c.num_classes = j.at("num_classes");
  c.droppath_max = j.at("droppath_max");
  c.input_channels = j.at("input_channels");
  c.expansion = j.at("expansion");
  c.input_size = j.at("input_size");
  c.gn_groups = j.at("gn_groups");
  return c;
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterSet<float>& params,
                     const LSNetConfig& config, std::uint64_t build_seed) {
  nlohmann::json header;
  header["format"] = "lsnet-ckpt";
  header["version"] = 1;
  header["config"] = config_to_json(config);
  header["build_seed"] = build_seed;
  nlohmann::json jp = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& e : params.entries) {
    jp.push_back({{"name", e.name},
                  {"rows", e.rows},
                  {"cols", e.cols},
                  {"dtype", "f32"},
                  {"offset", offset},
                  {"trainable", e.trainable}});
    offset += e.data.size() * sizeof(float);
  }
  header["params"] = jp;
  const std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "save_checkpoint: cannot open " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  const std::uint64_t hlen = htext.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& e : params.entries)
    out.write(reinterpret_cast<const char*>(e.data.data()),
              static_cast<std::streamsize>(e.data.size() * sizeof(float)));
  require(out.good(), "save_checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "load_checkpoint: cannot open " + path.string());
  std::string magic(sizeof(kMagic) - 1, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  require(in.good() && magic == kMagic, "load_checkpoint: bad magic in " + path.string());
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  require(in.good(), "load_checkpoint: truncated header");
  const nlohmann::json header = nlohmann::json::parse(htext);

  Checkpoint ck;
  ck.config = config_from_json(header.at("config"));
  ck.build_seed = header.at("build_seed");
  for (const auto& jp : header.at("params")) {
    ParameterSet<float>::Entry e;
    e.name = jp.at("name");
    e.rows = jp.at("rows");
    e.cols = jp.at("cols");
    e.trainable = jp.at("trainable");
    require(jp.at("dtype") == "f32", "load_checkpoint: unsupported dtype");
    e.data.resize(static_cast<std::size_t>(e.rows) * static_cast<std::size_t>(e.cols));
    in.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(float)));
    ck.params.entries.push_back(std::move(e));
  }
  require(in.good(), "load_checkpoint: truncated payload");
  return ck;
}

}  // namespace uavfl::lsnet
