#include <cmath>
#include <cstdio>
#include <functional>
#include <filesystem>
#include <sstream>
#include <string>

#include "clgas/cli_io.hpp"
#include "doctest.h"

using namespace clgas;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::IoError;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("clgas_test_" + name);
}

}  // namespace

TEST_CASE("parse_config: minimal config gets defaults") {
  const auto c = parse_config("N = 4\nd = 3\ngamma = 2\nbeta = 1.5\n");
  CHECK(c.system.N == 4);
  CHECK(c.system.d == 3);
  CHECK(c.system.gamma == 2.0);
  CHECK(c.system.beta == 1.5);
  CHECK(c.system.kernel.family == KernelFamily::Coulomb);
  CHECK(c.system.kernel.dimension == 3);
  CHECK(c.integrator.scheme == Scheme::BAOAB);
  CHECK(c.lyapunov.a == 0.5);
  CHECK(c.initial.layout == "auto");
  CHECK(min_pair_distance(initial_state(c)) > 0.0);
}

TEST_CASE("parse_config: comments, whitespace, seed propagation, overrides") {
  const auto c = parse_config("# a run\n  N=3   # three\n\nseed = 42\nintegrator.dt = 0.002\n",
                              {{"integrator.dt", "0.004"}, {"run.T", "5"}});
  CHECK(c.seed == 42);
  CHECK(c.integrator.seed == 42);
  CHECK(c.sampler.seed == 42);
  CHECK(c.integrator.dt == 0.004);
  CHECK(c.T == 5.0);
}

TEST_CASE("parse_config: fail-closed errors name line and key") {
  CHECK(kind_of([] { parse_config("N = 2\nbogus = 1\n"); }) == ErrorKind::ParseError);
  CHECK(message_of([] { parse_config("N = 2\nbogus = 1\n"); }).find("line 2") != std::string::npos);
  CHECK(message_of([] { parse_config("N = 2\nbogus = 1\n"); }).find("bogus") != std::string::npos);
  CHECK(message_of([] { parse_config("N = two\n"); }).find("'N'") != std::string::npos);
  CHECK(kind_of([] { parse_config("N 2\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_config("N = 2\nN = 3\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_config("integrator.scheme = rk4\n"); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_config("", {{"nope", "1"}}); }) == ErrorKind::ParseError);
  CHECK(kind_of([] { parse_config("beta = 1e\n"); }) == ErrorKind::ParseError);
}

TEST_CASE("parse_config: cross-field validation") {
  CHECK(kind_of([] { parse_config("d = 2\nkernel.family = log1d\n"); }) == ErrorKind::ValidationError);
  CHECK(message_of([] { parse_config("d = 2\nkernel.family = log1d\n"); }).find("kernel.family") !=
        std::string::npos);
  const auto one = parse_config("N = 3\nd = 1\nkernel.family = log1d\n");
  CHECK(is_ordered_1d(initial_state(one)));

  CHECK(kind_of([] { parse_config("beta = 2\nlyapunov.a = 2\n"); }) == ErrorKind::ValidationError);
  CHECK(message_of([] { parse_config("beta = 2\nlyapunov.a = 2\n"); }).find("0 < a < beta") != std::string::npos);
  CHECK(kind_of([] { parse_config("N = 3\nd = 1\nkernel.family = log1d\ninitial.layout = explicit\n"
                                  "initial.q = 0, -1, 1\n"); }) == ErrorKind::ValidationError);
  CHECK(kind_of([] { parse_config("N = 2\ninitial.layout = explicit\ninitial.q = 1,1,1,1\n"); }) ==
        ErrorKind::ValidationError);
  CHECK(kind_of([] { parse_config("N = 2\ninitial.layout = explicit\ninitial.q = 1,1\n"); }) ==
        ErrorKind::ValidationError);
  CHECK(kind_of([] { parse_config("integrator.dt = 0\n"); }) == ErrorKind::ValidationError);
  CHECK(kind_of([] { parse_config("sampler.leapfrog_steps = 0\n"); }) == ErrorKind::ValidationError);
  CHECK(kind_of([] { parse_config("kernel.family = riesz\nkernel.s = 3\n"); }) == ErrorKind::ValidationError);
}

TEST_CASE("ginibre preset through the config") {
  const auto c = parse_config("N = 16\nd = 3\nsampler.preset = ginibre\nsampler.beta_tilde = 2\n");
  CHECK(c.system.d == 2);
  CHECK(c.system.beta == 32.0);
  CHECK(c.potential_omega == 0.5);
}

TEST_CASE("property: config text round-trips") {
  const std::string text =
      "N = 5\nd = 3\ngamma = 0.7\nbeta = 2.5\nseed = 9\nkernel.family = riesz\nkernel.s = 0.3333333333333333\n"
      "potential.form = double_well\nlyapunov.b = 0.1234567891234\nintegrator.scheme = euler-maruyama\n"
      "integrator.W_cap_log = 50\ninitial.layout = explicit\n"
      "initial.q = 0.1,0,0, 1,0,0, 0,1,0, 0,0,1, -1,-1,-1\ninitial.p = 1,2,3,4,5,6,7,8,9,10,11,12,13,14,0.1\n"
      "output.csv = out dir/traj.csv\n";
  const auto a = parse_config(text);
  const auto canon = to_config_text(a);
  const auto b = parse_config(canon);
  CHECK(to_config_text(b) == canon);
  CHECK(b.system.kernel.s == a.system.kernel.s);
  CHECK(b.lyapunov.b == a.lyapunov.b);
  CHECK(b.initial.p == a.initial.p);
  CHECK(b.out_csv == "out dir/traj.csv");
  CHECK(b.integrator.W_cap_log == 50.0);
  CHECK(std::isinf(parse_config(to_config_text(parse_config(""))).integrator.W_cap_log));
  // Every key appears exactly once, one per line.
  const std::string wrapped = "\n" + canon;
  for (const auto& key : config_keys()) {
    const auto first = wrapped.find("\n" + key + " = ");
    CHECK(first != std::string::npos);
    CHECK(wrapped.find("\n" + key + " = ", first + 1) == std::string::npos);
  }
}

TEST_CASE("checkpoint round-trip and corruption") {
  ParticleState s(8, 3);
  StreamRng rng(123, 4);
  rng.fill_normal(s.q);
  rng.fill_normal(s.p);
  s.q[0] = -0.0;
  s.p[1] = 1e-310;
  rng.normal();
  const auto bytes = encode_checkpoint(s, rng);
  CHECK(bytes.size() == 5 + 8 + 8 * 48 + 4 + rng.serialize().size());
  CHECK(std::string(bytes.begin(), bytes.begin() + 5) == "CLGV1");
  const auto back = decode_checkpoint(bytes);
  CHECK(back.state == s);
  CHECK(std::signbit(back.state.q[0]));
  CHECK(back.rng == rng);
  CHECK(encode_checkpoint(back.state, back.rng) == bytes);

  auto bad_magic = bytes;
  bad_magic[1] = 'X';
  CHECK(kind_of([&] { decode_checkpoint(bad_magic); }) == ErrorKind::FormatError);

  auto bumped = bytes;
  bumped[4] = '2';
  CHECK(kind_of([&] { decode_checkpoint(bumped); }) == ErrorKind::FormatError);
  const auto msg = message_of([&] { decode_checkpoint(bumped); });
  CHECK(msg.find("expected 1") != std::string::npos);
  CHECK(msg.find("found 2") != std::string::npos);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{7}, std::size_t{100}, bytes.size() - 1}) {
    std::vector<std::uint8_t> shorter(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK(kind_of([&] { decode_checkpoint(shorter); }) == ErrorKind::TruncationError);
  }
  auto longer = bytes;
  longer.push_back(0);
  CHECK(kind_of([&] { decode_checkpoint(longer); }) == ErrorKind::FormatError);

  const auto path = temp_path("ckpt.bin").string();
  write_checkpoint(path, s, rng);
  CHECK(read_checkpoint(path).state == s);
  std::filesystem::remove(path);
  CHECK(kind_of([&] { read_checkpoint(path); }) == ErrorKind::IoError);
}

TEST_CASE("CSV writers and reader") {
  const auto c = parse_config("N = 2\nseed = 3\nintegrator.dt = 0.01\n");
  const auto rec = simulate(c.system, c.integrator, initial_state(c), 0.05, 2);
  std::ostringstream out;
  write_trajectory_csv(out, rec);
  const std::string text = out.str();
  CHECK(text.rfind("t,H,logW,minDist,kinetic,q0_0,q0_1,q1_0,q1_1,p0_0,p0_1,p1_0,p1_1\n", 0) == 0);
  std::istringstream in(text);
  const auto table = read_csv(in);
  CHECK(table.rows.size() == rec.states.size());
  CHECK(particle_shape(table) == std::pair<std::size_t, std::size_t>{2, 2});
  // %.17g is exact.
  CHECK(table.rows.back()[table.column("q1_1")] == rec.states.back().q[3]);
  CHECK(table.column_values("H").back() == rec.H.back());
  CHECK(kind_of([&] { table.column("nope"); }) == ErrorKind::FormatError);

  HmcChain chain;
  chain.iteration = {7};
  chain.samples = {initial_state(c)};
  chain.H = {1.25};
  chain.accepted = {1};
  std::ostringstream h;
  write_hmc_csv(h, chain);
  CHECK(h.str().rfind("iteration,H,accept,q0_0,q0_1,q1_0,q1_1\n7,1.25,1,", 0) == 0);

  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK(kind_of([&] { read_csv(ragged); }) == ErrorKind::FormatError);
  std::istringstream words("a,b\n1,x\n");
  CHECK(kind_of([&] { read_csv(words); }) == ErrorKind::FormatError);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("manifest round-trip and exit codes") {
  Manifest m{"simulate", to_config_text(parse_config("N = 3\n")), 17, {"a.csv", "a.ckpt"}};
  const auto json = manifest_to_json(m);
  const auto back = manifest_from_json(json);
  CHECK(back.subcommand == "simulate");
  CHECK(back.config_text == m.config_text);
  CHECK(back.seed == 17);
  CHECK(back.outputs == m.outputs);
  CHECK(json.find("\"tool_version\"") != std::string::npos);
  CHECK(kind_of([] { manifest_from_json("{"); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { manifest_from_json("{\"format\": \"other\"}"); }) == ErrorKind::FormatError);

  CHECK(exit_code(ErrorKind::ValidationError) == 2);
  CHECK(exit_code(ErrorKind::ParseError) == 2);
  CHECK(exit_code(ErrorKind::StepFailure) == 3);
  CHECK(exit_code(ErrorKind::CapHit) == 3);
  CHECK(exit_code(ErrorKind::IoError) == 4);
  CHECK(exit_code(ErrorKind::TruncationError) == 4);
}
