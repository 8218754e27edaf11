#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "oat/deduction.hpp"
#include "oat/protocol_model.hpp"

namespace oat::hlpsl {

struct Diagnostic {
  enum class Severity : std::uint8_t { Note, Warning, Error };

  std::string file;
  std::size_t line = 0;
  std::size_t column = 0;
  Severity severity = Severity::Warning;
  std::string message;
};

/// `file:line:col: severity: message`
std::string format(const Diagnostic& d);

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(Diagnostic d) : std::runtime_error(format(d)), diagnostic_(std::move(d)) {}
  const Diagnostic& diagnostic() const noexcept { return diagnostic_; }

 private:
  Diagnostic diagnostic_;
};

struct Call {
  std::string role;
  std::vector<std::string> args;

  friend bool operator==(const Call&, const Call&) = default;
};

struct SessionRole {
  std::string name;
  std::vector<Param> params;
  std::vector<Param> locals;
  std::vector<Call> composition;

  friend bool operator==(const SessionRole&, const SessionRole&) = default;
};

struct Environment {
  std::string name = "environment";
  std::vector<Param> consts;
  std::vector<std::string> intruder_knowledge;
  std::vector<Call> composition;

  friend bool operator==(const Environment&, const Environment&) = default;
};

struct Goal {
  std::string protocol_id;

  friend bool operator==(const Goal&, const Goal&) = default;
};

struct SpecModel {
  std::vector<RoleSpec> basic_roles;
  std::vector<SessionRole> session_roles;
  Environment environment;
  std::vector<Goal> goals;

  const RoleSpec* find_role(std::string_view name) const;

  friend bool operator==(const SpecModel&, const SpecModel&) = default;
};

struct ParseResult {
  SpecModel model;
  /// Non-fatal findings (warnings and notes).
  std::vector<Diagnostic> diagnostics;
};

/// Parses the supported HLPSL subset. Throws ParseError carrying the first
/// syntax or semantic error.
ParseResult parse_hlpsl(std::string_view source, std::string file = "<input>");

ParseResult parse_hlpsl_file(const std::string& path);

/// Re-emits a model as HLPSL text accepted by parse_hlpsl.
std::string pretty_print(const SpecModel& model);

/// One role instance planned by an environment composition.
struct InstancePlan {
  std::shared_ptr<const RoleSpec> role;
  std::map<std::string, Term> binding;
  /// Agent bound to the role's played_by parameter.
  std::string played_by;
};

/// One top-level session call from the environment, e.g. session(a,b,c,ks).
struct SessionPlan {
  Call call;
  std::vector<InstancePlan> instances;
};

struct LoweredModel {
  std::vector<std::shared_ptr<const RoleSpec>> roles;
  std::vector<Goal> goals;
  KnowledgeSet intruder_knowledge;
  std::vector<SessionPlan> sessions;
  /// Public key term each public_key constant lowered to.
  std::map<std::string, Term> key_constants;
};

/// Name of the agent the intruder plays as.
inline constexpr std::string_view intruder_agent = "i";

struct LowerOptions {
  /// Give the intruder the private half of its own key `ki`.
  bool intruder_private_key = true;
};

LoweredModel lower(const SpecModel& model, const LowerOptions& options = {});

}  // namespace oat::hlpsl
