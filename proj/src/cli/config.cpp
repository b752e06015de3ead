#include "wmdlab/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "wmdlab/error.hpp"

namespace wmdlab::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      auto t = trim(cur);
      if (!t.empty()) out.push_back(t);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::InvalidInput, "--" + key + ": '" + value + "' " + why);
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end || value.empty()) bad(key, value, "is not a non-negative integer");
  return v;
}

double to_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
    bad(key, value, "is not a number");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad(key, value, "is not a boolean");
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "base",       "bin-width",  "classifier", "clean",     "dataset",   "dims",
      "embeddings", "folds",      "format",     "keep-oov",  "method",    "metric",
      "neighbors",  "no-compute", "norm",       "out",       "pairs",     "renormalize",
      "seed",       "stopwords",  "train-fraction", "workers"};
  return keys;
}

Settings read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file " + path.string());
  Settings s;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty() || t.front() == '[') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ": line " + std::to_string(number) + ": expected key = value");
    }
    auto key = trim(t.substr(0, eq));
    auto value = trim(t.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw Error(ErrorCode::ParseError, path.string() + ": line " + std::to_string(number) +
                                             ": unknown key '" + key + "'");
    }
    s[key] = value;
  }
  return s;
}

RunConfig make_config(const Settings& settings) {
  RunConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };
  for (const auto& [key, value] : settings) {
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) bad(key, value, "is not an option");
  }
  if (auto v = get("dataset")) {
    for (const auto& p : split_list(*v)) c.datasets.emplace_back(p);
  }
  if (auto v = get("embeddings")) c.embeddings = *v;
  if (auto v = get("format")) {
    try {
      c.format = parse_embedding_format(*v);
    } catch (const Error&) {
      bad("format", *v, "is not word2vec-binary or text");
    }
  }
  NormScheme norm = NormScheme::L1;
  VectorMetric metric = VectorMetric::L1;
  if (auto v = get("norm")) {
    try {
      norm = parse_norm(*v);
    } catch (const Error&) {
      bad("norm", *v, "is not none, l1 or l2");
    }
  }
  if (auto v = get("metric")) {
    try {
      metric = parse_metric(*v);
    } catch (const Error&) {
      bad("metric", *v, "is not l1 or l2");
    }
  }
  for (const auto& m : split_list(get("method") ? *get("method") : "wmd,bow")) {
    try {
      const auto method = Method::parse(m, norm, metric);
      if (std::find(c.methods.begin(), c.methods.end(), method) == c.methods.end()) {
        c.methods.push_back(method);
      }
    } catch (const Error&) {
      bad("method", m, "is not a known method");
    }
  }
  if (c.methods.empty()) bad("method", "", "names no method");
  if (auto v = get("classifier")) {
    try {
      c.classifier = parse_classifier(*v);
    } catch (const Error&) {
      bad("classifier", *v, "is not knn or wknn");
    }
  }
  if (auto v = get("clean")) c.clean = to_bool("clean", *v);
  if (auto v = get("keep-oov")) c.keep_oov = to_bool("keep-oov", *v);
  if (auto v = get("stopwords")) c.stopwords = *v;
  if (auto v = get("dims")) {
    for (const auto& d : split_list(*v)) {
      const auto n = to_unsigned("dims", d);
      if (n == 0) bad("dims", d, "must be positive");
      c.dims.push_back(static_cast<std::size_t>(n));
    }
  }
  if (auto v = get("renormalize")) c.renormalize = to_bool("renormalize", *v);
  if (auto v = get("seed")) c.seed = to_unsigned("seed", *v);
  if (auto v = get("workers")) c.workers = static_cast<int>(to_unsigned("workers", *v));
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("no-compute")) c.no_compute = to_bool("no-compute", *v);
  if (auto v = get("folds")) {
    c.folds = static_cast<std::size_t>(to_unsigned("folds", *v));
    if (c.folds == 0) bad("folds", *v, "must be positive");
  }
  if (auto v = get("train-fraction")) {
    c.train_fraction = to_real("train-fraction", *v);
    if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) bad("train-fraction", *v, "must lie in (0, 1)");
  }
  if (auto v = get("pairs")) c.pairs = static_cast<std::size_t>(to_unsigned("pairs", *v));
  if (auto v = get("bin-width")) {
    c.bin_width = to_real("bin-width", *v);
    if (!(c.bin_width > 0.0)) bad("bin-width", *v, "must be positive");
  }
  if (auto v = get("neighbors")) {
    if (*v == "cross-split") c.neighbors = NeighborMode::CrossSplit;
    else if (*v == "leave-one-out") c.neighbors = NeighborMode::LeaveOneOut;
    else bad("neighbors", *v, "is not cross-split or leave-one-out");
  }
  if (auto v = get("base")) {
    try {
      c.base = Method::parse(*v, norm, metric).tag();
    } catch (const Error&) {
      bad("base", *v, "is not a known method");
    }
  }
  if (const char* env = std::getenv("WMDLAB_CACHE_DIR"); env && *env) {
    c.cache_dir = env;
  } else {
    c.cache_dir = c.out / "cache";
  }
  return c;
}

Settings to_settings(const RunConfig& c) {
  Settings s;
  std::string datasets;
  for (const auto& d : c.datasets) datasets += (datasets.empty() ? "" : ",") + d.string();
  s["dataset"] = datasets;
  s["embeddings"] = c.embeddings.string();
  s["format"] = std::string(to_string(c.format));
  std::string methods;
  for (const auto& m : c.methods) methods += (methods.empty() ? "" : ",") + m.tag();
  s["method"] = methods;
  s["classifier"] = std::string(to_string(c.classifier));
  s["clean"] = c.clean ? "true" : "false";
  s["keep-oov"] = c.keep_oov ? "true" : "false";
  s["stopwords"] = c.stopwords.string();
  std::string dims;
  for (auto d : c.dims) dims += (dims.empty() ? "" : ",") + std::to_string(d);
  s["dims"] = dims;
  s["renormalize"] = c.renormalize ? "true" : "false";
  s["seed"] = std::to_string(c.seed);
  s["out"] = c.out.string();
  s["folds"] = std::to_string(c.folds);
  s["train-fraction"] = format_real(c.train_fraction);
  s["pairs"] = std::to_string(c.pairs);
  s["bin-width"] = format_real(c.bin_width);
  s["neighbors"] = c.neighbors == NeighborMode::CrossSplit ? "cross-split" : "leave-one-out";
  s["base"] = c.base;
  return s;
}

}  // namespace wmdlab::cli
