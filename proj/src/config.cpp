#include "lkcfu/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "lkcfu/error.hpp"

namespace lkcf {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_int(std::string_view key, std::string_view v) {
  v = trim(v);
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw InvalidArgument("config key '" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  v = trim(v);
  std::string s(v);
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (s.empty() || pos != s.size())
    throw InvalidArgument("config key '" + std::string(key) + "': not a number: '" + s + "'");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config key '" + std::string(key) + "': not a boolean: '" + std::string(v) + "'");
}

std::array<int, 4> parse_int4(std::string_view key, std::string_view v) {
  std::array<int, 4> out{};
  std::size_t n = 0;
  while (true) {
    const auto comma = v.find(',');
    if (n == 4) throw InvalidArgument("config key '" + std::string(key) + "': expected 4 entries");
    out[n++] = parse_int(key, v.substr(0, comma));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (n != 4) throw InvalidArgument("config key '" + std::string(key) + "': expected 4 entries");
  return out;
}

std::string join4(const std::array<int, 4>& a) {
  std::ostringstream os;
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
  return os.str();
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::map<std::string, std::string> canonical_fields(const ModelConfig& c) {
  return {
      {"init_norm", to_string(c.init_norm)},
      {"body_norm", to_string(c.body_norm)},
      {"gn_groups_body", std::to_string(c.gn_groups_body)},
      {"init_kernel", std::to_string(c.init_kernel)},
      {"kernel_schedule", join4(c.kernel_schedule)},
      {"channel_widths", join4(c.channel_widths)},
      {"use_mpafm", c.use_mpafm ? "true" : "false"},
      {"use_lkdc", c.use_lkdc ? "true" : "false"},
      {"dropout_p", format_double(c.dropout_p)},
  };
}

}  // namespace

std::string to_string(InitNorm n) {
  switch (n) {
    case InitNorm::kInstance: return "IN";
    case InitNorm::kBatch: return "BN";
    case InitNorm::kNone: return "none";
  }
  return "?";
}

std::string to_string(BodyNorm n) {
  switch (n) {
    case BodyNorm::kGroup: return "GN";
    case BodyNorm::kBatch: return "BN";
    case BodyNorm::kNone: return "none";
  }
  return "?";
}

ModelConfig default_model_config() { return ModelConfig{}; }

ModelConfig desk_scale(ModelConfig cfg) {
  cfg.channel_widths = kDeskScaleWidths;
  return cfg;
}

void validate(const ModelConfig& cfg) {
  auto check_kernel = [](int k, const char* what) {
    if (k < 1 || k % 2 == 0 || k > 15)
      throw InvalidArgument(std::string(what) + " must be an odd kernel size in [1,15], got " + std::to_string(k));
  };
  check_kernel(cfg.init_kernel, "init_kernel");
  for (int k : cfg.kernel_schedule) check_kernel(k, "kernel_schedule entry");
  for (int c : cfg.channel_widths)
    if (c < 1) throw InvalidArgument("channel_widths entries must be positive");
  if (cfg.gn_groups_body < 1) throw InvalidArgument("gn_groups_body must be positive");
  if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0)) throw InvalidArgument("dropout_p must lie in [0,1)");
}

ModelConfig ablation_config(AblationRow row) {
  ModelConfig c = default_model_config();
  constexpr std::array<int, 4> k3{3, 3, 3, 3};
  switch (row) {
    case AblationRow::kI:
      c.init_norm = InitNorm::kBatch;
      c.body_norm = BodyNorm::kBatch;
      c.init_kernel = 3;
      c.kernel_schedule = k3;
      break;
    case AblationRow::kII:
      c.init_norm = InitNorm::kBatch;
      c.body_norm = BodyNorm::kBatch;
      break;
    case AblationRow::kIII:
      c.init_norm = InitNorm::kBatch;
      break;
    case AblationRow::kIV:
      c.init_kernel = 3;
      c.kernel_schedule = k3;
      break;
    case AblationRow::kV:
      c.init_norm = InitNorm::kNone;
      c.body_norm = BodyNorm::kNone;
      break;
    case AblationRow::kVI:
      c.use_mpafm = false;
      break;
    case AblationRow::kOurs:
      break;
  }
  return c;
}

AblationRow parse_ablation_row(std::string_view tag) {
  tag = trim(tag);
  if (tag == "I") return AblationRow::kI;
  if (tag == "II") return AblationRow::kII;
  if (tag == "III") return AblationRow::kIII;
  if (tag == "IV") return AblationRow::kIV;
  if (tag == "V") return AblationRow::kV;
  if (tag == "VI") return AblationRow::kVI;
  if (tag == "Ours" || tag == "ours" || tag == "OURS") return AblationRow::kOurs;
  throw InvalidArgument("unknown ablation row '" + std::string(tag) + "' (expected I..VI or Ours)");
}

std::string to_string(AblationRow row) {
  switch (row) {
    case AblationRow::kI: return "I";
    case AblationRow::kII: return "II";
    case AblationRow::kIII: return "III";
    case AblationRow::kIV: return "IV";
    case AblationRow::kV: return "V";
    case AblationRow::kVI: return "VI";
    case AblationRow::kOurs: return "Ours";
  }
  return "?";
}

std::string describe(AblationRow row) {
  switch (row) {
    case AblationRow::kI: return "all BN+3*3 Conv";
    case AblationRow::kII: return "all BN+LKC";
    case AblationRow::kIII: return "BN+GN+LKC";
    case AblationRow::kIV: return "IN+GN+3*3 Conv";
    case AblationRow::kV: return "w/o Norm";
    case AblationRow::kVI: return "w/o MPAFM";
    case AblationRow::kOurs: return "IN+GN+LKC";
  }
  return "?";
}

std::string to_kv_text(const ModelConfig& cfg) {
  static constexpr std::array<const char*, 9> kOrder{
      "init_norm",       "body_norm",      "gn_groups_body", "init_kernel", "kernel_schedule",
      "channel_widths",  "use_mpafm",      "use_lkdc",       "dropout_p"};
  const auto fields = canonical_fields(cfg);
  std::string out;
  for (const char* k : kOrder) out += std::string(k) + " = " + fields.at(k) + "\n";
  return out;
}

ModelConfig model_config_from_kv(std::string_view text) {
  ModelConfig c = default_model_config();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = line;
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key(trim(l.substr(0, eq)));
    const std::string_view val = trim(l.substr(eq + 1));
    if (key == "init_norm") {
      if (val == "IN") c.init_norm = InitNorm::kInstance;
      else if (val == "BN") c.init_norm = InitNorm::kBatch;
      else if (val == "none") c.init_norm = InitNorm::kNone;
      else throw InvalidArgument("init_norm must be IN, BN or none");
    } else if (key == "body_norm") {
      if (val == "GN") c.body_norm = BodyNorm::kGroup;
      else if (val == "BN") c.body_norm = BodyNorm::kBatch;
      else if (val == "none") c.body_norm = BodyNorm::kNone;
      else throw InvalidArgument("body_norm must be GN, BN or none");
    } else if (key == "gn_groups_body") {
      c.gn_groups_body = parse_int(key, val);
    } else if (key == "init_kernel") {
      c.init_kernel = parse_int(key, val);
    } else if (key == "kernel_schedule") {
      c.kernel_schedule = parse_int4(key, val);
    } else if (key == "channel_widths") {
      c.channel_widths = parse_int4(key, val);
    } else if (key == "use_mpafm") {
      c.use_mpafm = parse_bool(key, val);
    } else if (key == "use_lkdc") {
      c.use_lkdc = parse_bool(key, val);
    } else if (key == "dropout_p") {
      c.dropout_p = parse_double(key, val);
    } else {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

void save_model_config(const ModelConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# lkcfu model config\n" << to_kv_text(cfg);
  if (!out) throw IoError("write failed: '" + path + "'");
}

ModelConfig load_model_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_config_from_kv(ss.str());
}

std::string stable_hash(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kHex[h & 0xF];
  return out;
}

std::string fingerprint(const ModelConfig& cfg) { return stable_hash(to_kv_text(cfg)); }

std::vector<std::string> diff_fields(const ModelConfig& expected, const ModelConfig& actual) {
  const auto a = canonical_fields(expected);
  const auto b = canonical_fields(actual);
  std::vector<std::string> out;
  for (const auto& [k, v] : a)
    if (b.at(k) != v) out.push_back(k + ": expected " + v + ", got " + b.at(k));
  return out;
}

}  // namespace lkcf
