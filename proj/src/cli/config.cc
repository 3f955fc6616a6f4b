#include "ddir/cli/config.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "ddir/common/error.h"

namespace ddir::cli {
namespace fs = std::filesystem;

namespace {

struct BadValue {
  std::string why;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw BadValue{"'" + v + "' is not a number"};
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw BadValue{"'" + v + "' is not finite"};
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw BadValue{"'" + v + "' is not true/false"};
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<double>(trim(item)));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
  bool is_path = false;
};

template <typename T>
Field number(std::string key, T RunConfig::*member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>(v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return fmt(c.*member);
            else return std::to_string(c.*member);
          }};
}

template <typename S, typename T>
Field nested(std::string key, S RunConfig::*outer, T S::*member) {
  return {std::move(key),
          [outer, member](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) (c.*outer).*member = parse_bool(v);
            else (c.*outer).*member = parse_number<T>(v);
          },
          [outer, member](const RunConfig& c) {
            const T value = (c.*outer).*member;
            if constexpr (std::is_same_v<T, bool>) return fmt_bool(value);
            else if constexpr (std::is_floating_point_v<T>) return fmt(value);
            else return std::to_string(value);
          }};
}

Field encoder_field(std::string key, encoder::EncoderConfig model::DdirConfig::*enc,
                    std::size_t encoder::EncoderConfig::*member) {
  return {std::move(key),
          [enc, member](RunConfig& c, const std::string& v) { (c.model.*enc).*member = parse_number<std::size_t>(v); },
          [enc, member](const RunConfig& c) { return std::to_string((c.model.*enc).*member); }};
}

Field path(std::string key, fs::path RunConfig::*member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { c.*member = v; },
          [member](const RunConfig& c) { return (c.*member).string(); }, true};
}

Field flag(std::string key, bool RunConfig::*member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { c.*member = parse_bool(v); },
          [member](const RunConfig& c) { return fmt_bool(c.*member); }};
}

Field list(std::string key, std::vector<double> RunConfig::*member) {
  return {std::move(key), [member](RunConfig& c, const std::string& v) { c.*member = parse_list(v); },
          [member](const RunConfig& c) { return fmt_list(c.*member); }};
}

template <typename E>
Field choice(std::string key, E RunConfig::*member, std::vector<std::pair<std::string, E>> names) {
  return {std::move(key),
          [member, names](RunConfig& c, const std::string& v) {
            std::string options;
            for (const auto& [n, e] : names) {
              if (n == v) {
                c.*member = e;
                return;
              }
              options += (options.empty() ? "" : "|") + n;
            }
            throw BadValue{"'" + v + "' is not one of " + options};
          },
          [member, names](const RunConfig& c) {
            for (const auto& [n, e] : names) {
              if (e == c.*member) return n;
            }
            return std::string("?");
          }};
}

const std::vector<Field>& fields() {
  using model::DdirConfig;
  using encoder::EncoderConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(encoder_field("model.enc_sr.channels", &DdirConfig::enc_sr, &EncoderConfig::channels));
    f.push_back(encoder_field("model.enc_sr.blocks", &DdirConfig::enc_sr, &EncoderConfig::blocks));
    f.push_back(encoder_field("model.enc_def.channels", &DdirConfig::enc_def, &EncoderConfig::channels));
    f.push_back(encoder_field("model.enc_def.blocks", &DdirConfig::enc_def, &EncoderConfig::blocks));
    f.push_back(nested("model.hidden_sr", &RunConfig::model, &DdirConfig::hidden_sr));
    f.push_back(nested("model.hidden_def", &RunConfig::model, &DdirConfig::hidden_def));
    f.push_back(nested("model.layers", &RunConfig::model, &DdirConfig::layers));
    f.push_back(nested("model.use_deformation_field", &RunConfig::model, &DdirConfig::use_deformation_field));
    f.push_back(nested("model.use_appearance_embedding", &RunConfig::model, &DdirConfig::use_appearance_embedding));
    f.push_back(nested("model.embedding_into_sr", &RunConfig::model, &DdirConfig::embedding_into_sr));
    f.push_back(nested("model.stop_deformation_gradient", &RunConfig::model, &DdirConfig::stop_deformation_gradient));
    f.push_back({"model.area_rule",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "diagonal") c.model.area_rule = lif::AreaRule::kDiagonal;
                   else if (v == "same_corner") c.model.area_rule = lif::AreaRule::kSameCorner;
                   else throw BadValue{"'" + v + "' is not one of diagonal|same_corner"};
                 },
                 [](const RunConfig& c) {
                   return std::string(c.model.area_rule == lif::AreaRule::kDiagonal ? "diagonal" : "same_corner");
                 }});

    f.push_back(number("optim.lr", &RunConfig::lr));
    f.push_back(number("optim.lr_decay", &RunConfig::lr_decay));
    f.push_back(number("optim.decay_every", &RunConfig::decay_every));
    f.push_back(number("optim.beta1", &RunConfig::beta1));
    f.push_back(number("optim.beta2", &RunConfig::beta2));
    f.push_back(number("optim.eps", &RunConfig::eps));

    f.push_back(number("train.batch", &RunConfig::batch));
    f.push_back(number("train.epochs", &RunConfig::epochs));
    f.push_back(number("train.seed", &RunConfig::seed));
    f.push_back(number("train.queries", &RunConfig::queries));
    f.push_back(number("train.patch", &RunConfig::patch));
    f.push_back(number("train.iters_per_epoch", &RunConfig::iters_per_epoch));
    f.push_back(number("train.save_interval", &RunConfig::save_interval));
    f.push_back(flag("train.deterministic", &RunConfig::deterministic));

    f.push_back(path("data.train_manifest", &RunConfig::train_manifest));
    f.push_back(path("data.test_manifest", &RunConfig::test_manifest));

    f.push_back(list("eval.scales", &RunConfig::eval_scales));
    f.push_back(number("eval.shave", &RunConfig::shave));
    f.push_back(choice("eval.mode", &RunConfig::eval_mode,
                       {{"model", EvalMode::kModel}, {"bicubic", EvalMode::kBicubic}, {"identity", EvalMode::kIdentity}}));
    f.push_back(number("eval.chunk", &RunConfig::chunk));

    f.push_back(path("io.output_dir", &RunConfig::output_dir));

    f.push_back(path("synth.source_dir", &RunConfig::synth_source));
    f.push_back(choice("synth.kind", &RunConfig::synth_kind,
                       {{"smooth", data::SourceKind::kSmooth},
                        {"texture", data::SourceKind::kTexture},
                        {"stationary", data::SourceKind::kStationary}}));
    f.push_back(number("synth.count", &RunConfig::synth_count));
    f.push_back(number("synth.height", &RunConfig::synth_height));
    f.push_back(number("synth.width", &RunConfig::synth_width));
    f.push_back(number("synth.period", &RunConfig::synth_period));
    f.push_back(list("synth.scales", &RunConfig::synth_scales));
    using data::SyntheticConfig;
    f.push_back(nested("synth.offset_range", &RunConfig::synth, &SyntheticConfig::offset_range));
    f.push_back(nested("synth.gain_min", &RunConfig::synth, &SyntheticConfig::gain_min));
    f.push_back(nested("synth.gain_max", &RunConfig::synth, &SyntheticConfig::gain_max));
    f.push_back(nested("synth.sigma_min", &RunConfig::synth, &SyntheticConfig::sigma_min));
    f.push_back(nested("synth.sigma_max", &RunConfig::synth, &SyntheticConfig::sigma_max));
    f.push_back(nested("synth.sigma_grid", &RunConfig::synth, &SyntheticConfig::sigma_grid));
    f.push_back(nested("synth.noise_sigma", &RunConfig::synth, &SyntheticConfig::noise_sigma));
    f.push_back(nested("synth.seed", &RunConfig::synth, &SyntheticConfig::seed));
    f.push_back(path("synth.output_dir", &RunConfig::synth_output));

    f.push_back(number("gradcheck.step", &RunConfig::gradcheck_step));
    f.push_back(number("gradcheck.seed", &RunConfig::gradcheck_seed));
    return f;
  }();
  return table;
}

void validate(const RunConfig& c) {
  c.model.validate();
  c.model.enc_sr.validate();
  c.model.enc_def.validate();
  if (!(c.lr > 0)) throw UsageError("optim.lr must be positive");
  if (!(c.lr_decay > 0)) throw UsageError("optim.lr_decay must be positive");
  if (c.decay_every == 0) throw UsageError("optim.decay_every must be positive");
  if (!(c.beta1 >= 0 && c.beta1 < 1 && c.beta2 >= 0 && c.beta2 < 1)) {
    throw UsageError("optim.beta1 and optim.beta2 must lie in [0, 1)");
  }
  if (!(c.eps > 0)) throw UsageError("optim.eps must be positive");
  if (c.batch == 0 || c.queries == 0 || c.patch == 0) {
    throw UsageError("train.batch, train.queries and train.patch must be positive");
  }
  if (c.patch < 2) throw UsageError("train.patch must be at least 2");
  for (double s : c.eval_scales) {
    if (!(s > 0)) throw UsageError("eval.scales must be positive");
  }
  for (double s : c.synth_scales) {
    if (!(s > 0)) throw UsageError("synth.scales must be positive");
  }
  if (c.chunk == 0) throw UsageError("eval.chunk must be positive");
  if (!(c.gradcheck_step > 0)) throw UsageError("gradcheck.step must be positive");
  c.synth.validate();
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base, const std::string& origin) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  auto fail = [&](const std::string& why) {
    throw UsageError(origin + ":" + std::to_string(number) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    const Field* field = nullptr;
    for (const Field& f : fields()) {
      if (f.key == key) field = &f;
    }
    if (field == nullptr) fail("unknown key '" + key + "'");
    if (!seen.insert(key).second) fail("key '" + key + "' given twice");
    try {
      field->set(cfg, value);
    } catch (const BadValue& e) {
      fail(key + ": " + e.why);
    }
    if (field->is_path && !value.empty() && fs::path(value).is_relative()) {
      field->set(cfg, (base / value).lexically_normal().string());
    }
  }
  try {
    validate(cfg);
  } catch (const UsageError& e) {
    throw UsageError(origin + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path(), path.string());
}

std::string echo_config(const RunConfig& cfg, bool include_io) {
  std::string out;
  for (const Field& f : fields()) {
    if (!include_io && f.key.rfind("io.", 0) == 0) continue;
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.push_back(f.key);
  return keys;
}

double learning_rate(const RunConfig& cfg, std::size_t epoch) {
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.decay_every));
}

}  // namespace ddir::cli
