#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "oat/checker.hpp"
#include "oat/msc.hpp"
#include "oat/net_sim.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kAttack = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

struct RunArgs {
  std::string registry;
  std::string registry_out;
  std::string trace;
  std::string device = "dev1";
  std::string buyer = "b";
  std::string password;
  std::uint64_t seed = 0;
};

int cmd_run(const RunArgs& args) {
  oat::Registry registry = oat::Registry::load(args.registry, args.seed);
  const oat::OwnershipRecord* rec = registry.record(args.device);
  if (!rec) throw std::runtime_error("device " + args.device + " is not in " + args.registry);
  oat::TransferSetup setup;
  setup.device = args.device;
  setup.seller = rec->owner;
  setup.seller_credential = oat::Term::password(args.password.empty() ? rec->owner : args.password);
  setup.buyer = args.buyer;
  auto result = oat::run_session(setup, registry, {});
  if (!args.trace.empty()) write_file(args.trace, result.trace.to_jsonl());
  registry.store(args.registry_out.empty() ? args.registry : args.registry_out);
  const oat::OwnershipRecord* after = registry.record(args.device);
  if (result.completed) {
    std::cout << "transfer complete: " << args.device << " owner " << setup.seller << " -> " << after->owner
              << ", temp_id " << after->temp_id.value_or("") << '\n';
    return kOk;
  }
  std::cout << "transfer aborted: " << args.device << " status " << oat::to_string(after->status) << '\n';
  return kAttack;
}

struct AttackArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string trace;
};

int cmd_attack(const AttackArgs& args) {
  oat::Registry registry(args.seed);
  oat::TransferSetup setup;
  registry.provision(setup.device, setup.seller, setup.seller_credential);

  oat::ChannelConfig config;
  config.seed = args.seed;
  std::unique_ptr<oat::IntruderPolicy> policy;
  const std::string& s = args.scenario;
  if (s == "eavesdrop") {
    config.mode = oat::ChannelMode::Eavesdrop;
  } else if (s == "mitm-forward") {
    config.mode = oat::ChannelMode::ActiveMitm;
    policy = oat::make_forward_all();
  } else if (s == "mitm-garbage") {
    config.mode = oat::ChannelMode::ActiveMitm;
    auto garbage = oat::Term::aenc(oat::Term::concat(oat::Term::agent("i"), oat::Term::agent("a")), registry.public_key());
    policy = oat::make_inject_at(1 + args.seed % 5, garbage);
  } else if (s == "replay-random") {
    config.mode = oat::ChannelMode::ActiveMitm;
    policy = oat::make_replay_random(args.seed);
  } else if (s.rfind("drop-at-", 0) == 0) {
    config.mode = oat::ChannelMode::ActiveMitm;
    std::size_t k = std::stoul(s.substr(8));
    if (k == 0) throw CLI::ValidationError("--scenario", "drop-at-K needs K >= 1");
    policy = oat::make_drop_at(k);
  } else {
    throw CLI::ValidationError("--scenario", "unknown scenario " + s);
  }

  auto result = oat::run_session(setup, registry, config, policy.get());
  if (!args.trace.empty()) write_file(args.trace, result.trace.to_jsonl());
  auto leaked = oat::check_secrecy(result.intruder_knowledge, oat::transfer_secrets(result));
  const oat::OwnershipRecord* rec = registry.record(setup.device);

  std::cout << "scenario " << s << ": " << oat::protocol_messages(result.trace).size() << " messages, "
            << (result.completed ? "transfer complete" : "transfer aborted") << ", record "
            << oat::to_string(rec->status) << ", owner " << rec->owner << '\n';
  if (leaked.empty()) {
    std::cout << "secrets derived: none\n";
  } else {
    std::cout << "secrets derived:";
    for (const auto& t : leaked) std::cout << ' ' << oat::encode(t);
    std::cout << '\n';
  }
  return result.completed && leaked.empty() ? kOk : kAttack;
}

struct VerifyArgs {
  std::string spec;
  std::size_t sessions = 1;
  std::size_t depth = 12;
  bool injective = true;
  std::size_t jobs = 1;
  std::vector<std::string> goals;
  bool withhold_intruder_key = false;
};

int cmd_verify(const VerifyArgs& args) {
  auto parsed = oat::hlpsl::parse_hlpsl_file(args.spec);
  for (const auto& d : parsed.diagnostics) std::cerr << oat::hlpsl::format(d) << '\n';
  oat::hlpsl::LowerOptions lower_opts;
  lower_opts.intruder_private_key = !args.withhold_intruder_key;
  auto model = oat::hlpsl::lower(parsed.model, lower_opts);

  oat::CheckOptions opts;
  opts.bounds = {args.sessions, args.depth};
  opts.injective = args.injective;
  opts.jobs = args.jobs;
  opts.goals = args.goals;
  auto report = oat::check(model, opts);

  for (const auto& g : report.goals) {
    if (const auto* safe = std::get_if<oat::Safe>(&g.verdict)) {
      std::cout << g.goal << ": SAFE (bounded) sessions=" << args.sessions << " depth=" << args.depth
                << " states=" << safe->states_explored << " reached=" << safe->depth_reached << '\n';
    }
  }
  for (const auto& g : report.goals) {
    if (const auto* attack = std::get_if<oat::Attack>(&g.verdict)) {
      std::cout << g.goal << ": ATTACK\n";
      std::cout << "# attack on " << g.goal << ": " << attack->description << '\n';
      std::cout << oat::attack_trace(*attack).to_jsonl();
    }
  }
  return report.safe() ? kOk : kAttack;
}

int cmd_msc(const std::string& path) {
  std::cout << oat::render_msc(oat::Trace::from_jsonl(read_file(path)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ownership transfer protocol toolkit"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run one honest ownership transfer against a registry file");
  run_cmd->add_option("--registry", run.registry, "Registry JSONL file")->required();
  run_cmd->add_option("--registry-out", run.registry_out, "Where to write the updated registry (default: in place)");
  run_cmd->add_option("--trace", run.trace, "Write the message trace here (JSONL)");
  run_cmd->add_option("--seed", run.seed, "Seed for transfer and TempID identifiers");
  run_cmd->add_option("--device", run.device, "Device identifier");
  run_cmd->add_option("--buyer", run.buyer, "Buyer agent name");
  run_cmd->add_option("--password", run.password, "Seller password name (default: current owner)");

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Run a transfer through an adversarial channel");
  attack_cmd
      ->add_option("--scenario", attack.scenario,
                   "eavesdrop, mitm-forward, mitm-garbage, replay-random or drop-at-K")
      ->required();
  attack_cmd->add_option("--seed", attack.seed, "Seed for the registry and the intruder");
  attack_cmd->add_option("--trace", attack.trace, "Write the message trace here (JSONL)");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Bounded model check of an HLPSL specification");
  verify_cmd->add_option("spec", verify.spec, "HLPSL file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--sessions", verify.sessions, "Number of sessions")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--depth", verify.depth, "Maximum transitions per path");
  verify_cmd->add_flag("--injective,!--non-injective", verify.injective, "Injective agreement (default)");
  verify_cmd->add_option("--jobs", verify.jobs, "Worker threads")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--goal", verify.goals, "Only check this goal (repeatable)");
  verify_cmd->add_flag("--withhold-intruder-key", verify.withhold_intruder_key,
                       "Do not give the intruder the private half of ki");

  std::string msc_path;
  auto* msc_cmd = app.add_subcommand("msc", "Render a trace as a text sequence chart");
  msc_cmd->add_option("trace", msc_path, "Trace JSONL file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFailure;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*attack_cmd) return cmd_attack(attack);
    if (*verify_cmd) return cmd_verify(verify);
    if (*msc_cmd) return cmd_msc(msc_path);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kFailure;
  } catch (const oat::hlpsl::ParseError& e) {
    std::cerr << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "oat: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
