#include "dgpcg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "dgpcg/errors.hpp"

namespace dgpcg {

namespace {

using nlohmann::json;

[[noreturn]] void bad_value(const std::string& key, const std::string& expected) {
  throw Error(Errc::InvalidConfig, "key '" + key + "': expected " + expected);
}

double as_real(const std::string& key, const json& v) {
  if (!v.is_number()) bad_value(key, "a number");
  return v.get<double>();
}

std::uint64_t as_count(const std::string& key, const json& v) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad_value(key, "a non-negative integer");
  return v.get<std::uint64_t>();
}

bool as_bool(const std::string& key, const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "on" || s == "true") return true;
    if (s == "off" || s == "false") return false;
  }
  if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) return v.get<int>() == 1;
  bad_value(key, "on/off");
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad_value(key, "a string");
  return v.get<std::string>();
}

template <typename T, typename F>
std::vector<T> as_list(const std::string& key, const json& v, F element) {
  if (!v.is_array() || v.empty()) bad_value(key, "a non-empty list");
  std::vector<T> out;
  for (const auto& e : v) out.push_back(static_cast<T>(element(key, e)));
  return out;
}

json index_list(const std::vector<Eigen::Index>& v) {
  json a = json::array();
  for (auto x : v) a.push_back(static_cast<std::int64_t>(x));
  return a;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

#define COUNT_FIELD(name, member)                                                         \
  Field{name, [](RunConfig& c, const json& v) { c.member = as_count(name, v); },          \
        [](const RunConfig& c) { return json(static_cast<std::uint64_t>(c.member)); }}
#define REAL_FIELD(name, member)                                                          \
  Field{name, [](RunConfig& c, const json& v) { c.member = as_real(name, v); },           \
        [](const RunConfig& c) { return json(c.member); }}
#define BOOL_FIELD(name, member)                                                          \
  Field{name, [](RunConfig& c, const json& v) { c.member = as_bool(name, v); },           \
        [](const RunConfig& c) { return json(c.member ? "on" : "off"); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"seed", [](RunConfig& c, const json& v) { c.seed = as_count("seed", v); },
            [](const RunConfig& c) { return json(c.seed.value_or(resolve_seed(c.seed))); }},
      Field{"output_dir",
            [](RunConfig& c, const json& v) { c.output_dir = as_string("output_dir", v); },
            [](const RunConfig& c) { return json(c.output_dir.string()); }},
      COUNT_FIELD("epochs", train.epochs),
      COUNT_FIELD("batch_size", train.batch_size),
      REAL_FIELD("lr", train.lr),
      COUNT_FIELD("lr_halve_every", train.lr_halve_every),
      REAL_FIELD("lambda_p", train.lambda_p),
      COUNT_FIELD("n_neighbors", train.n_neighbors),
      BOOL_FIELD("dgp", train.dgp_enabled),
      BOOL_FIELD("kernel_grad", train.kernel_grad),
      COUNT_FIELD("gp_depth", gp_depth),
      Field{"kernel_base",
            [](RunConfig& c, const json& v) {
              try {
                c.kernel_base = kernel_family_from_string(as_string("kernel_base", v));
              } catch (const Error&) {
                bad_value("kernel_base", "one of SE, LIN, SC");
              }
            },
            [](const RunConfig& c) { return json(std::string(to_string(c.kernel_base))); }},
      REAL_FIELD("kernel_beta", kernel_beta),
      REAL_FIELD("kernel_gamma", kernel_gamma),
      REAL_FIELD("noise_var", noise_var),
      Field{"gen_hidden",
            [](RunConfig& c, const json& v) {
              c.train.generator.hidden = as_list<Eigen::Index>("gen_hidden", v, as_count);
            },
            [](const RunConfig& c) { return index_list(c.train.generator.hidden); }},
      COUNT_FIELD("tap_s", train.generator.tap_s),
      COUNT_FIELD("tap_z", train.generator.tap_z),
      BOOL_FIELD("residual", train.generator.residual),
      Field{"disc_hidden",
            [](RunConfig& c, const json& v) {
              c.train.discriminator.hidden = as_list<Eigen::Index>("disc_hidden", v, as_count);
            },
            [](const RunConfig& c) { return index_list(c.train.discriminator.hidden); }},
      COUNT_FIELD("disc_tile", train.discriminator.tile),
      COUNT_FIELD("disc_stride", train.discriminator.stride),
      COUNT_FIELD("train_per_domain", data.train_per_domain),
      COUNT_FIELD("test_size", data.test_size),
      Field{"patch_size",
            [](RunConfig& c, const json& v) {
              c.data.width = c.data.height = static_cast<int>(as_count("patch_size", v));
            },
            [](const RunConfig& c) { return json(c.data.width); }},
      COUNT_FIELD("streak_count", data.degrade.streak_count),
      REAL_FIELD("streak_amplitude", data.degrade.streak_amplitude),
      REAL_FIELD("streak_angle", data.degrade.streak_angle),
      REAL_FIELD("streak_width", data.degrade.streak_width),
      COUNT_FIELD("streak_length", data.degrade.streak_length),
      COUNT_FIELD("sample_every", sample_every),
      COUNT_FIELD("samples_per_eval", samples_per_eval),
      COUNT_FIELD("checkpoint_every", checkpoint_every),
      BOOL_FIELD("dump_banks", dump_banks),
      Field{"ablate_depths",
            [](RunConfig& c, const json& v) {
              c.ablate_depths = as_list<std::size_t>("ablate_depths", v, as_count);
            },
            [](const RunConfig& c) { return json(c.ablate_depths); }},
      Field{"ablate_neighbors",
            [](RunConfig& c, const json& v) {
              c.ablate_neighbors = as_list<std::size_t>("ablate_neighbors", v, as_count);
            },
            [](const RunConfig& c) { return json(c.ablate_neighbors); }},
      Field{"ablate_lambdas",
            [](RunConfig& c, const json& v) {
              c.ablate_lambdas = as_list<double>("ablate_lambdas", v, as_real);
            },
            [](const RunConfig& c) { return json(c.ablate_lambdas); }},
      COUNT_FIELD("jobs", jobs),
  };
  return table;
}

#undef COUNT_FIELD
#undef REAL_FIELD
#undef BOOL_FIELD

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw Error(Errc::InvalidConfig, "unknown key '" + key + "'");
}

// Flag text to JSON: numbers and booleans parse as such, a comma makes a
// list, anything else stays a string.
json flag_value(const std::string& text) {
  if (text.find(',') != std::string::npos) {
    json a = json::array();
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) a.push_back(flag_value(part));
    return a;
  }
  const json parsed = json::parse(text, nullptr, false);
  if (!parsed.is_discarded() && (parsed.is_number() || parsed.is_boolean())) return parsed;
  return json(text);
}

}  // namespace

void RunConfig::finalize() {
  const std::uint64_t s = resolve_seed(seed);
  seed = s;
  train.seed = s;
  data.seed = s;
  train.kernel = KernelSpec::composed(kernel_base, gp_depth, kernel_beta, kernel_gamma, noise_var);
  train.validate();
  if (data.width < 11) throw Error(Errc::InvalidConfig, "key 'patch_size': must be >= 11");
  if (jobs == 0) throw Error(Errc::InvalidConfig, "key 'jobs': must be >= 1");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::IoError, "cannot open config " + path.string());
  json doc = json::parse(is, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw Error(Errc::InvalidConfig, path.string() + " is not a JSON object");
  for (const auto& [key, value] : doc.items()) field(key);
  RunConfig c;
  for (const auto& f : fields()) {
    const auto it = doc.find(f.key);
    if (it == doc.end()) {
      if (f.key == "seed") continue;
      throw Error(Errc::InvalidConfig, "missing key '" + f.key + "'");
    }
    f.set(c, *it);
  }
  return c;
}

void apply_override(RunConfig& config, const std::string& key, const std::string& value) {
  field(key).set(config, flag_value(value));
}

std::string to_json(const RunConfig& config) {
  json doc = json::object();
  for (const auto& f : fields()) doc[f.key] = f.get(config);
  // nlohmann sorts object keys; emit in table order instead.
  std::ostringstream os;
  os << "{\n";
  const auto& keys = config_keys();
  for (std::size_t i = 0; i < keys.size(); ++i)
    os << "  " << json(keys[i]).dump() << ": " << doc[keys[i]].dump()
       << (i + 1 < keys.size() ? ",\n" : "\n");
  os << "}\n";
  return os.str();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& explicit_seed) {
  if (explicit_seed) return *explicit_seed;
  if (const char* env = std::getenv("DGP_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw Error(Errc::InvalidConfig, "DGP_SEED is not an integer");
    return v;
  }
  return 0;
}

}  // namespace dgpcg
