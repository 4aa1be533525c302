#include "clgas/cli_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace clgas {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view what) {
  throw std::invalid_argument("key '" + std::string(key) + "': expected " + std::string(what) + ", found '" +
                              std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  std::string_view body = v;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  if (body == "inf") return INFINITY;
  if (body == "-inf") return -INFINITY;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), out);
  if (ec != std::errc() || ptr != body.data() + body.size() || body.empty()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
  return out;
}

int to_int(std::string_view key, std::string_view v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "an integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::vector<double> to_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const auto item = trim(v.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    out.push_back(to_double(key, item));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string list_text(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ",";
    out += format_double(v[k]);
  }
  return out;
}

std::string choose(std::string_view key, std::string_view v, std::initializer_list<std::string_view> allowed) {
  std::string list;
  for (auto a : allowed) {
    if (v == a) return std::string(v);
    list += (list.empty() ? "" : "|") + std::string(a);
  }
  bad_value(key, v, list);
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CLGAS_DOUBLE(KEY, MEMBER)                                                                   \
  Field {                                                                                          \
    KEY, [](RunConfig& c, std::string_view k, std::string_view v) { c.MEMBER = to_double(k, v); }, \
        [](const RunConfig& c) { return format_double(c.MEMBER); }                                 \
  }
#define CLGAS_SIZE(KEY, MEMBER)                                                                 \
  Field {                                                                                       \
    KEY, [](RunConfig& c, std::string_view k, std::string_view v) { c.MEMBER = to_u64(k, v); }, \
        [](const RunConfig& c) { return std::to_string(c.MEMBER); }                             \
  }
#define CLGAS_TEXT(KEY, MEMBER)                                                                   \
  Field {                                                                                         \
    KEY, [](RunConfig& c, std::string_view, std::string_view v) { c.MEMBER = std::string(v); }, \
        [](const RunConfig& c) { return c.MEMBER; }                                               \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      CLGAS_SIZE("N", system.N),
      CLGAS_SIZE("d", system.d),
      CLGAS_DOUBLE("gamma", system.gamma),
      CLGAS_DOUBLE("beta", system.beta),
      CLGAS_SIZE("seed", seed),
      {"kernel.family",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         const auto f = choose(k, v, {"coulomb", "riesz", "log1d"});
         c.system.kernel.family = f == "coulomb" ? KernelFamily::Coulomb
                                  : f == "riesz" ? KernelFamily::Riesz
                                                 : KernelFamily::Log1D;
       },
       [](const RunConfig& c) { return std::string(to_string(c.system.kernel.family)); }},
      CLGAS_DOUBLE("kernel.s", system.kernel.s),
      {"kernel.normalization",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.system.kernel.normalization =
             choose(k, v, {"paper", "exact"}) == "exact" ? Normalization::Exact : Normalization::PaperConvention;
       },
       [](const RunConfig& c) { return std::string(to_string(c.system.kernel.normalization)); }},
      {"potential.form",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.potential_form = choose(k, v, {"quadratic", "double_well"});
       },
       [](const RunConfig& c) { return c.potential_form; }},
      CLGAS_DOUBLE("potential.omega", potential_omega),
      CLGAS_DOUBLE("lyapunov.a", lyapunov.a),
      CLGAS_DOUBLE("lyapunov.b", lyapunov.b),
      CLGAS_DOUBLE("lyapunov.c", lyapunov.c),
      CLGAS_DOUBLE("lyapunov.eps1", lyapunov.eps1),
      CLGAS_DOUBLE("lyapunov.eps2", lyapunov.eps2),
      {"integrator.scheme",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.integrator.scheme =
             choose(k, v, {"baoab", "euler-maruyama"}) == "baoab" ? Scheme::BAOAB : Scheme::EulerMaruyama;
       },
       [](const RunConfig& c) { return std::string(to_string(c.integrator.scheme)); }},
      CLGAS_DOUBLE("integrator.dt", integrator.dt),
      CLGAS_DOUBLE("integrator.eta", integrator.eta),
      CLGAS_DOUBLE("integrator.W_cap_log", integrator.W_cap_log),
      {"integrator.max_halvings",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.integrator.max_halvings = to_int(k, v); },
       [](const RunConfig& c) { return std::to_string(c.integrator.max_halvings); }},
      {"integrator.noise",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.integrator.noise = to_bool(k, v); },
       [](const RunConfig& c) { return std::string(c.integrator.noise ? "true" : "false"); }},
      CLGAS_DOUBLE("run.T", T),
      CLGAS_SIZE("run.stride", stride),
      CLGAS_SIZE("verify.replicas", replicas),
      CLGAS_SIZE("verify.checkpoints", checkpoints),
      CLGAS_SIZE("verify.bootstrap", bootstrap),
      CLGAS_SIZE("verify.n_train", n_train),
      CLGAS_SIZE("verify.n_test", n_test),
      CLGAS_SIZE("verify.n_configs", n_configs),
      {"sampler.leapfrog_steps",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.sampler.leapfrog_steps = to_int(k, v); },
       [](const RunConfig& c) { return std::to_string(c.sampler.leapfrog_steps); }},
      CLGAS_DOUBLE("sampler.leapfrog_dt", sampler.leapfrog_dt),
      CLGAS_DOUBLE("sampler.momentum_refresh", sampler.momentum_refresh),
      CLGAS_SIZE("sampler.n_samples", sampler.n_samples),
      CLGAS_SIZE("sampler.burn_in", sampler.burn_in),
      CLGAS_SIZE("sampler.thin", sampler.thin),
      {"sampler.preset",
       [](RunConfig& c, std::string_view k, std::string_view v) { c.preset = choose(k, v, {"none", "ginibre"}); },
       [](const RunConfig& c) { return c.preset; }},
      CLGAS_DOUBLE("sampler.beta_tilde", beta_tilde),
      CLGAS_TEXT("diagnose.input", diagnose_input),
      CLGAS_SIZE("diagnose.burn_in", diagnose_burn_in),
      CLGAS_SIZE("diagnose.bins", diagnose_bins),
      {"initial.layout",
       [](RunConfig& c, std::string_view k, std::string_view v) {
         c.initial.layout = choose(k, v, {"auto", "ring", "line", "gaussian", "explicit"});
       },
       [](const RunConfig& c) { return c.initial.layout; }},
      CLGAS_DOUBLE("initial.scale", initial.scale),
      {"initial.q", [](RunConfig& c, std::string_view k, std::string_view v) { c.initial.q = to_list(k, v); },
       [](const RunConfig& c) { return list_text(c.initial.q); }},
      {"initial.p", [](RunConfig& c, std::string_view k, std::string_view v) { c.initial.p = to_list(k, v); },
       [](const RunConfig& c) { return list_text(c.initial.p); }},
      CLGAS_TEXT("initial.checkpoint", initial.checkpoint),
      CLGAS_TEXT("output.csv", out_csv),
      CLGAS_TEXT("output.checkpoint", out_checkpoint),
      CLGAS_TEXT("output.json", out_json),
  };
  return table;
}

#undef CLGAS_DOUBLE
#undef CLGAS_SIZE
#undef CLGAS_TEXT

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void apply(RunConfig& c, std::string_view key, std::string_view value, const std::string& where) {
  const Field* f = find_field(key);
  if (!f) throw Error(ErrorKind::ParseError, where + ": unknown key '" + std::string(key) + "'");
  try {
    f->set(c, key, value);
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorKind::ParseError, where + ": " + e.what());
  }
}

void resolve(RunConfig& c) {
  if (c.preset == "ginibre") {
    const std::size_t n = c.system.N;
    const double bt = c.beta_tilde;
    const double gamma = c.system.gamma;
    c.system = ginibre_preset(n, bt);
    c.system.gamma = gamma;
    c.potential_form = "quadratic";
    c.potential_omega = 0.5;
  }
  c.system.kernel.dimension = static_cast<int>(c.system.d);
  c.system.potential = c.potential_form == "double_well" ? ConfiningPotential::double_well()
                                                         : ConfiningPotential::quadratic(c.potential_omega);
  c.integrator.lyapunov = c.lyapunov;
  c.integrator.seed = c.seed;
  c.sampler.seed = c.seed;
}

[[noreturn]] void invalid(const std::string& field, const std::string& message) {
  throw Error(ErrorKind::ValidationError, field + ": " + message);
}

template <class Fn>
void rethrow_as_validation(const std::string& field, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ValidationError) throw;
    invalid(field, e.what());
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::TruncationError, std::string("checkpoint ends inside ") + what + " at byte " +
                                                  std::to_string(bytes_.size()) + ", needed " +
                                                  std::to_string(pos_ + n));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * k);
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * k);
    return std::bit_cast<double>(v);
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  RunConfig c;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::ParseError, where + ": expected 'key = value', found '" + std::string(line) + "'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ParseError, where + ": empty key");
    if (!seen.insert(std::string(key)).second) {
      throw Error(ErrorKind::ParseError, where + ": duplicate key '" + std::string(key) + "'");
    }
    apply(c, key, value, where);
  }
  for (const auto& [key, value] : overrides) apply(c, trim(key), trim(value), "override");
  resolve(c);
  validate_run_config(c);
  return c;
}

std::string to_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
  return out;
}

void validate_run_config(const RunConfig& c) {
  if (c.system.kernel.family == KernelFamily::Log1D && c.system.d != 1) {
    invalid("kernel.family", "log1d requires d = 1, found d = " + std::to_string(c.system.d));
  }
  if (c.preset == "ginibre" && !(c.beta_tilde > 0.0)) invalid("sampler.beta_tilde", "must be > 0");
  c.system.validate();
  if (c.potential_form == "quadratic" && !(c.potential_omega > 0.0)) invalid("potential.omega", "must be > 0");

  const double beta = c.system.beta;
  if (!(c.lyapunov.a > 0.0 && c.lyapunov.a < beta)) {
    invalid("lyapunov.a", "requires 0 < a < beta, found a = " + format_double(c.lyapunov.a) +
                              ", beta = " + format_double(beta));
  }
  if (!(c.lyapunov.b > 0.0)) invalid("lyapunov.b", "must be > 0");
  if (!(c.lyapunov.c > 0.0)) invalid("lyapunov.c", "must be > 0");
  if (!(c.lyapunov.eps1 > 0.0)) invalid("lyapunov.eps1", "must be > 0");
  if (!(c.lyapunov.eps2 > 0.0)) invalid("lyapunov.eps2", "must be > 0");

  rethrow_as_validation("integrator", [&] { c.integrator.validate(); });
  rethrow_as_validation("sampler", [&] { c.sampler.validate(); });
  if (!(c.T >= 0.0) || !std::isfinite(c.T)) invalid("run.T", "must be finite and >= 0");
  if (c.stride == 0) invalid("run.stride", "must be >= 1");
  if (c.checkpoints == 0) invalid("verify.checkpoints", "must be >= 1");
  if (c.diagnose_bins == 0) invalid("diagnose.bins", "must be >= 1");
  if (!(c.initial.scale > 0.0)) invalid("initial.scale", "must be > 0");

  const std::size_t nd = c.system.N * c.system.d;
  if (c.initial.layout == "explicit" && c.initial.q.size() != nd) {
    invalid("initial.q", "has " + std::to_string(c.initial.q.size()) + " values, expected N*d = " +
                             std::to_string(nd));
  }
  if (c.initial.layout != "explicit" && !c.initial.q.empty()) invalid("initial.q", "requires initial.layout = explicit");
  if (!c.initial.p.empty() && c.initial.p.size() != nd) {
    invalid("initial.p", "has " + std::to_string(c.initial.p.size()) + " values, expected N*d = " +
                             std::to_string(nd));
  }
  if (c.initial.layout == "ring" && c.system.d < 2) invalid("initial.layout", "ring requires d >= 2");
  const auto s0 = initial_state(c);
  if (!s0.all_finite()) invalid("initial.q", "contains non-finite values");
  if (c.system.N > 1 && !(min_pair_distance(s0) > 0.0)) invalid("initial.q", "particles coincide");
  if (c.system.d == 1 && !is_ordered_1d(s0)) invalid("initial.q", "d = 1 positions must be strictly increasing");
}

ParticleState initial_state(const RunConfig& c) {
  const std::size_t n = c.system.N, d = c.system.d;
  ParticleState s(n, d);
  std::string layout = c.initial.layout;
  if (layout == "auto") layout = d == 1 ? "line" : "ring";
  if (layout == "explicit") {
    if (c.initial.q.size() == s.q.size()) s.q = c.initial.q;
  } else if (layout == "line") {
    for (std::size_t i = 0; i < n; ++i) {
      s.q[i * d] = n == 1 ? 0.0 : c.initial.scale * (2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0);
    }
  } else if (layout == "ring") {
    for (std::size_t i = 0; i < n && d >= 2; ++i) {
      const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n);
      s.q[i * d] = n == 1 ? 0.0 : c.initial.scale * std::cos(th);
      s.q[i * d + 1] = n == 1 ? 0.0 : c.initial.scale * std::sin(th);
    }
  } else if (layout == "gaussian") {
    StreamRng rng(c.seed, 2);
    rng.fill_normal(s.q, c.initial.scale);
    if (d == 1) std::sort(s.q.begin(), s.q.end());
  }
  if (c.initial.p.size() == s.p.size()) s.p = c.initial.p;
  return s;
}

std::vector<std::uint8_t> encode_checkpoint(const ParticleState& state, const StreamRng& rng) {
  std::vector<std::uint8_t> out = {'C', 'L', 'G', 'V', static_cast<std::uint8_t>('0' + kCheckpointVersion)};
  put_u32(out, static_cast<std::uint32_t>(state.n));
  put_u32(out, static_cast<std::uint32_t>(state.d));
  for (double v : state.q) put_f64(out, v);
  for (double v : state.p) put_f64(out, v);
  const auto r = rng.serialize();
  put_u32(out, static_cast<std::uint32_t>(r.size()));
  out.insert(out.end(), r.begin(), r.end());
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  const auto magic = in.take(4, "magic");
  if (!(magic[0] == 'C' && magic[1] == 'L' && magic[2] == 'G' && magic[3] == 'V')) {
    std::string found(magic.begin(), magic.end());
    throw Error(ErrorKind::FormatError, "bad checkpoint magic: expected 'CLGV', found '" + found + "'");
  }
  const auto version = in.take(1, "version")[0];
  if (version != '0' + kCheckpointVersion) {
    const std::string found = version >= '0' && version <= '9' ? std::string(1, static_cast<char>(version))
                                                               : "byte " + std::to_string(version);
    throw Error(ErrorKind::FormatError, "unsupported checkpoint version: expected " +
                                            std::to_string(kCheckpointVersion) + ", found " + found);
  }
  const std::uint32_t n = in.u32("N");
  const std::uint32_t d = in.u32("d");
  const std::uint64_t count = static_cast<std::uint64_t>(n) * d;
  if (count > in.remaining() / 16) in.need(count * 16, "coordinates");
  Checkpoint cp;
  cp.state = ParticleState(n, d);
  for (auto& v : cp.state.q) v = in.f64("q");
  for (auto& v : cp.state.p) v = in.f64("p");
  const std::uint32_t len = in.u32("rng length");
  cp.rng = StreamRng::deserialize(in.take(len, "rng state"));
  if (in.remaining() != 0) {
    throw Error(ErrorKind::FormatError, std::to_string(in.remaining()) + " trailing bytes after checkpoint");
  }
  return cp;
}

void write_checkpoint(const std::string& path, const ParticleState& state, const StreamRng& rng) {
  const auto bytes = encode_checkpoint(state, rng);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

void particle_header(std::ostream& out, char prefix, std::size_t n, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) out << ',' << prefix << i << '_' << k;
  }
}

void values(std::ostream& out, const std::vector<double>& v) {
  for (double x : v) out << ',' << format_double(x);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  const std::size_t n = record.states.empty() ? 0 : record.states.front().n;
  const std::size_t d = record.states.empty() ? 0 : record.states.front().d;
  out << "t,H,logW,minDist,kinetic";
  particle_header(out, 'q', n, d);
  particle_header(out, 'p', n, d);
  out << '\n';
  for (std::size_t s = 0; s < record.states.size(); ++s) {
    const std::size_t k = record.snapshot_index[s];
    out << format_double(record.times[k]) << ',' << format_double(record.H[k]) << ','
        << format_double(record.log_w[k]) << ',' << format_double(record.min_dist[k]) << ','
        << format_double(record.kinetic[k]);
    values(out, record.states[s].q);
    values(out, record.states[s].p);
    out << '\n';
  }
}

void write_hmc_csv(std::ostream& out, const HmcChain& chain) {
  const std::size_t n = chain.samples.empty() ? 0 : chain.samples.front().n;
  const std::size_t d = chain.samples.empty() ? 0 : chain.samples.front().d;
  out << "iteration,H,accept";
  particle_header(out, 'q', n, d);
  out << '\n';
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    out << chain.iteration[s] << ',' << format_double(chain.H[s]) << ',' << (chain.accepted[s] ? 1 : 0);
    values(out, chain.samples[s].q);
    out << '\n';
  }
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw Error(ErrorKind::FormatError, "CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::column_values(std::string_view name) const {
  const std::size_t k = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[k]);
  return out;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::FormatError, "CSV is empty");
  auto split = [](std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
      const auto c = s.find(',', pos);
      out.push_back(trim(s.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos)));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    return out;
  };
  for (auto h : split(trim(line))) table.header.emplace_back(h);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line));
    if (cells.size() != table.header.size()) {
      throw Error(ErrorKind::FormatError, "CSV line " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) + " fields, header has " +
                                              std::to_string(table.header.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      try {
        row.push_back(to_double(table.header[k], cells[k]));
      } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::FormatError, "CSV line " + std::to_string(line_no) + ", column '" + table.header[k] +
                                                "': not a number: '" + std::string(cells[k]) + "'");
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::pair<std::size_t, std::size_t> particle_shape(const CsvTable& table) {
  std::size_t n = 0, d = 0;
  for (const auto& h : table.header) {
    if (h.size() < 4 || h[0] != 'q') continue;
    const auto us = h.find('_');
    if (us == std::string::npos) continue;
    n = std::max(n, static_cast<std::size_t>(std::stoul(h.substr(1, us - 1))) + 1);
    d = std::max(d, static_cast<std::size_t>(std::stoul(h.substr(us + 1))) + 1);
  }
  if (n == 0) throw Error(ErrorKind::FormatError, "CSV has no q<i>_<k> columns");
  return {n, d};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::InvalidConfig:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::MissingConstants:
      return 2;
    case ErrorKind::StepFailure:
    case ErrorKind::CapHit:
    case ErrorKind::ZeroSeparation:
    case ErrorKind::InfeasibleFit:
    case ErrorKind::DegenerateSeries:
    case ErrorKind::EmptyEnsemble:
      return 3;
    case ErrorKind::FormatError:
    case ErrorKind::TruncationError:
    case ErrorKind::IoError:
      return 4;
  }
  return 3;
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["format"] = "clgas-manifest";
  j["manifest_version"] = 1;
  j["tool_version"] = kToolVersion;
  j["artifact_versions"] = {{"checkpoint", kCheckpointVersion}, {"trajectory_csv", 1}, {"hmc_csv", 1}};
  j["subcommand"] = m.subcommand;
  j["seed"] = m.seed;
  j["config"] = m.config_text;
  j["outputs"] = m.outputs;
  return j.dump(2) + "\n";
}

Manifest manifest_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "clgas-manifest") {
    throw Error(ErrorKind::FormatError, "not a clgas manifest");
  }
  if (j.value("manifest_version", 0) != 1) {
    throw Error(ErrorKind::FormatError,
                "unsupported manifest version: expected 1, found " + j.value("manifest_version", nlohmann::json()).dump());
  }
  Manifest m;
  try {
    m.subcommand = j.at("subcommand").get<std::string>();
    m.config_text = j.at("config").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("manifest field: ") + e.what());
  }
  return m;
}

}  // namespace clgas
