#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "oat/hlpsl.hpp"

namespace oat::hlpsl {

std::string format(const Diagnostic& d) {
  const char* sev = d.severity == Diagnostic::Severity::Error     ? "error"
                    : d.severity == Diagnostic::Severity::Warning ? "warning"
                                                                  : "note";
  return d.file + ":" + std::to_string(d.line) + ":" + std::to_string(d.column) + ": " + sev + ": " + d.message;
}

const RoleSpec* SpecModel::find_role(std::string_view name) const {
  for (const auto& r : basic_roles)
    if (r.name == name) return &r;
  return nullptr;
}

namespace {

enum class Tok : std::uint8_t {
  Ident,
  Number,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Comma,
  Colon,
  Dot,
  Prime,
  Assign,
  Eq,
  And,
  Arrow,
  Under,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

const char* describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Comma: return "','";
    case Tok::Colon: return "':'";
    case Tok::Dot: return "'.'";
    case Tok::Prime: return "'''";
    case Tok::Assign: return "':='";
    case Tok::Eq: return "'='";
    case Tok::And: return "'/\\'";
    case Tok::Arrow: return "'=|>'";
    case Tok::Under: return "'_'";
    case Tok::End: return "end of input";
  }
  return "?";
}

class Lexer {
 public:
  Lexer(std::string_view src, const std::string& file) : src_(src), file_(file) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_trivia();
      std::size_t line = line_, col = col_;
      if (pos_ >= src_.size()) {
        out.push_back({Tok::End, "", line, col});
        return out;
      }
      char c = src_[pos_];
      auto push = [&](Tok k, std::size_t len) {
        out.push_back({k, std::string(src_.substr(pos_, len)), line, col});
        advance(len);
      };
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t n = 0;
        while (pos_ + n < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_ + n])) || src_[pos_ + n] == '_')) {
          ++n;
        }
        push(Tok::Ident, n);
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t n = 0;
        while (pos_ + n < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + n]))) ++n;
        push(Tok::Number, n);
      } else if (starts("=|>")) {
        push(Tok::Arrow, 3);
      } else if (starts(":=")) {
        push(Tok::Assign, 2);
      } else if (starts("/\\")) {
        push(Tok::And, 2);
      } else {
        switch (c) {
          case '(': push(Tok::LParen, 1); break;
          case ')': push(Tok::RParen, 1); break;
          case '{': push(Tok::LBrace, 1); break;
          case '}': push(Tok::RBrace, 1); break;
          case ',': push(Tok::Comma, 1); break;
          case ':': push(Tok::Colon, 1); break;
          case '.': push(Tok::Dot, 1); break;
          case '\'': push(Tok::Prime, 1); break;
          case '=': push(Tok::Eq, 1); break;
          case '_':
            if (out.empty() || out.back().kind != Tok::RBrace) fail(line, col, "'_' must follow '}'");
            push(Tok::Under, 1);
            break;
          default:
            fail(line, col, std::string("unexpected character '") + c + "'");
        }
      }
    }
  }

 private:
  [[noreturn]] void fail(std::size_t line, std::size_t col, const std::string& msg) const {
    throw ParseError({file_, line, col, Diagnostic::Severity::Error, msg});
  }

  bool starts(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance(1);
      } else if (c == '%') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      } else if (starts("--")) {
        while (pos_ < src_.size() && src_[pos_] == '-') advance(1);
      } else {
        return;
      }
    }
  }

  std::string_view src_;
  const std::string& file_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

struct VarUse {
  std::string var;
  bool primed;
  std::size_t line;
  std::size_t column;
};

struct PendingIdCheck {
  std::string id;
  std::size_t line;
  std::size_t column;
  bool goal;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::string file) : toks_(std::move(toks)), file_(std::move(file)) {}

  ParseResult run() {
    std::vector<SessionRole> composed;
    std::vector<std::pair<SessionRole, Environment>> envs;
    std::optional<Token> goal_tok;
    std::optional<std::string> top_call;
    bool saw_goal_block = false;

    while (peek().kind != Tok::End) {
      if (is_word("role")) {
        parse_role(composed, envs);
      } else if (is_word("goal")) {
        goal_tok = next();
        saw_goal_block = true;
        parse_goals();
      } else if (peek().kind == Tok::Ident) {
        Token t = next();
        expect(Tok::LParen);
        expect(Tok::RParen);
        top_call = t.text;
      } else {
        fail(peek(), std::string("unexpected ") + describe(peek().kind));
      }
    }

    // The environment is the role invoked at top level, falling back to the
    // one named `environment`.
    std::string env_name = top_call.value_or("environment");
    bool found_env = false;
    for (auto& [s, env] : envs) {
      if (s.name == env_name) {
        result_.model.environment = env;
        found_env = true;
      } else {
        result_.model.session_roles.push_back(s);
      }
    }
    for (auto& s : composed) {
      if (s.name == env_name) {
        Environment env;
        env.name = s.name;
        env.composition = s.composition;
        result_.model.environment = env;
        found_env = true;
      } else {
        result_.model.session_roles.push_back(s);
      }
    }
    if (!found_env) fail(toks_.back(), "no environment role '" + env_name + "'");
    if (!saw_goal_block || result_.model.goals.empty()) fail(goal_tok.value_or(toks_.back()), "no goals declared");

    check_semantics();
    return std::move(result_);
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_word(std::string_view w, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    next();
    return true;
  }

  [[noreturn]] void fail(const Token& at, const std::string& msg) const {
    throw ParseError({file_, at.line, at.column, Diagnostic::Severity::Error, msg});
  }

  Token expect(Tok k) {
    if (peek().kind != k) {
      fail(peek(), std::string("expected ") + describe(k) + ", found " +
                       (peek().kind == Tok::End ? std::string("end of input") : "'" + peek().text + "'"));
    }
    return next();
  }

  void expect_word(std::string_view w) {
    if (!is_word(w)) fail(peek(), "expected '" + std::string(w) + "'");
    next();
  }

  void warn(const Token& at, std::string msg) { warn(at.line, at.column, std::move(msg)); }
  void warn(std::size_t line, std::size_t col, std::string msg) {
    result_.diagnostics.push_back({file_, line, col, Diagnostic::Severity::Warning, std::move(msg)});
  }

  VarKind parse_type() {
    Token t = expect(Tok::Ident);
    if (t.text == "channel") {
      expect(Tok::LParen);
      Token mode = expect(Tok::Ident);
      if (mode.text != "dy") fail(mode, "unsupported channel model '" + mode.text + "'");
      expect(Tok::RParen);
      return VarKind::Channel;
    }
    static const std::map<std::string, VarKind, std::less<>> kinds{
        {"agent", VarKind::Agent}, {"public_key", VarKind::PublicKey}, {"nat", VarKind::Nat},
        {"text", VarKind::Text},   {"message", VarKind::Message},      {"protocol_id", VarKind::ProtocolId},
    };
    auto it = kinds.find(t.text);
    if (it == kinds.end()) fail(t, "unsupported type '" + t.text + "'");
    return it->second;
  }

  std::vector<Param> parse_decls() {
    std::vector<Param> out;
    std::set<std::string> seen;
    while (true) {
      std::vector<Token> names{expect(Tok::Ident)};
      while (accept(Tok::Comma)) names.push_back(expect(Tok::Ident));
      expect(Tok::Colon);
      VarKind kind = parse_type();
      for (auto& n : names) {
        if (!seen.insert(n.text).second) fail(n, "duplicate declaration of '" + n.text + "'");
        out.push_back({n.text, kind});
      }
      // Another group follows only as `, Ident ... :`.
      if (peek().kind == Tok::Comma && peek(1).kind == Tok::Ident) {
        next();
        continue;
      }
      return out;
    }
  }

  std::vector<Call> parse_calls() {
    std::vector<Call> calls;
    do {
      Token name = expect(Tok::Ident);
      Call c{name.text, {}};
      expect(Tok::LParen);
      if (peek().kind != Tok::RParen) {
        c.args.push_back(expect(Tok::Ident).text);
        while (accept(Tok::Comma)) c.args.push_back(expect(Tok::Ident).text);
      }
      expect(Tok::RParen);
      call_pos_.push_back({name.line, name.column});
      calls.push_back(std::move(c));
    } while (accept(Tok::And));
    return calls;
  }

  void parse_role(std::vector<SessionRole>& composed, std::vector<std::pair<SessionRole, Environment>>& envs) {
    expect_word("role");
    Token name = expect(Tok::Ident);
    if (role_names_.count(name.text)) fail(name, "duplicate role '" + name.text + "'");
    role_names_.insert(name.text);
    expect(Tok::LParen);
    std::vector<Param> params;
    if (peek().kind != Tok::RParen) params = parse_decls();
    expect(Tok::RParen);
    std::optional<Token> played_by;
    if (is_word("played_by")) {
      next();
      played_by = expect(Tok::Ident);
    }
    expect_word("def");
    expect(Tok::Eq);

    RoleSpec role;
    role.name = name.text;
    role.params = params;
    std::vector<Param> consts;
    std::vector<std::string> ik;
    std::optional<std::vector<Call>> composition;
    std::size_t call_pos_start = call_pos_.size();
    bool has_transitions = false;
    bool has_init = false;

    while (!is_word("end")) {
      if (peek().kind == Tok::End) fail(peek(), "missing 'end role'");
      Token kw = expect(Tok::Ident);
      if (kw.text == "local") {
        role.locals = parse_decls();
        for (const auto& l : role.locals) {
          for (const auto& p : params)
            if (p.name == l.name) fail(kw, "local '" + l.name + "' shadows a parameter");
        }
      } else if (kw.text == "const") {
        consts = parse_decls();
      } else if (kw.text == "init") {
        parse_init(role);
        has_init = true;
      } else if (kw.text == "intruder_knowledge") {
        expect(Tok::Eq);
        expect(Tok::LBrace);
        if (peek().kind != Tok::RBrace) {
          ik_pos_ = {peek().line, peek().column};
          ik.push_back(expect(Tok::Ident).text);
          while (accept(Tok::Comma)) ik.push_back(expect(Tok::Ident).text);
        }
        expect(Tok::RBrace);
      } else if (kw.text == "transition") {
        has_transitions = true;
        parse_transitions(role);
      } else if (kw.text == "composition") {
        composition = parse_calls();
      } else {
        fail(kw, "unexpected '" + kw.text + "' in role body");
      }
    }
    expect_word("end");
    expect_word("role");

    if (has_transitions) {
      if (!played_by) fail(name, "basic role '" + role.name + "' lacks played_by");
      const Param* pb = role.find_var(played_by->text);
      if (!pb || pb->kind != VarKind::Agent) fail(*played_by, "played_by names no agent parameter");
      role.played_by = played_by->text;
      if (!has_init) fail(name, "basic role '" + role.name + "' has no init");
      check_role(role, name);
      result_.model.basic_roles.push_back(std::move(role));
      return;
    }
    if (!composition) fail(name, "role '" + role.name + "' has neither transitions nor composition");
    SessionRole s{role.name, params, role.locals, *composition};
    composition_pos_[s.name] = std::vector<std::pair<std::size_t, std::size_t>>(
        call_pos_.begin() + static_cast<std::ptrdiff_t>(call_pos_start), call_pos_.end());
    if (!consts.empty() || !ik.empty()) {
      Environment env;
      env.name = role.name;
      env.consts = consts;
      env.intruder_knowledge = ik;
      env.composition = *composition;
      envs.emplace_back(std::move(s), std::move(env));
    } else {
      composed.push_back(std::move(s));
    }
  }

  void parse_init(RoleSpec& role) {
    do {
      Token var = expect(Tok::Ident);
      expect(Tok::Assign);
      Token val = expect(Tok::Number);
      const Param* p = role.find_var(var.text);
      if (!p) fail(var, "unbound identifier '" + var.text + "'");
      if (p->kind != VarKind::Nat) fail(var, "only the nat state variable can be initialised");
      role.state_var = var.text;
      role.initial_state = static_cast<std::uint32_t>(std::stoul(val.text));
    } while (accept(Tok::And));
  }

  Pattern parse_pattern(const RoleSpec& role, std::vector<VarUse>& uses) {
    Pattern first = parse_primary(role, uses);
    if (accept(Tok::Dot)) return Pattern::cat(std::move(first), parse_pattern(role, uses));
    return first;
  }

  Pattern parse_primary(const RoleSpec& role, std::vector<VarUse>& uses) {
    if (accept(Tok::LBrace)) {
      Pattern body = parse_pattern(role, uses);
      expect(Tok::RBrace);
      expect(Tok::Under);
      Pattern key = parse_key(role, uses);
      return Pattern::enc(std::move(body), std::move(key));
    }
    if (accept(Tok::LParen)) {
      Pattern inner = parse_pattern(role, uses);
      expect(Tok::RParen);
      return inner;
    }
    return parse_var(role, uses);
  }

  Pattern parse_key(const RoleSpec& role, std::vector<VarUse>& uses) {
    if (accept(Tok::LParen)) {
      Pattern inner = parse_pattern(role, uses);
      expect(Tok::RParen);
      return inner;
    }
    return parse_var(role, uses);
  }

  Pattern parse_var(const RoleSpec& role, std::vector<VarUse>& uses) {
    Token id = expect(Tok::Ident);
    bool primed = accept(Tok::Prime);
    if (id.text == "start" && !role.find_var(id.text)) {
      if (primed) fail(id, "'start' cannot be primed");
      return Pattern::constant(start_token());
    }
    const Param* p = role.find_var(id.text);
    if (!p) fail(id, "unbound identifier '" + id.text + "'");
    if (p->kind == VarKind::Nat || p->kind == VarKind::Channel) {
      fail(id, "'" + id.text + "' of type " + std::string(to_string(p->kind)) + " cannot appear in a message");
    }
    uses.push_back({id.text, primed, id.line, id.column});
    return Pattern::variable(id.text, primed);
  }

  Event parse_event(const RoleSpec& role, const Token& head, bool guard, std::vector<VarUse>& uses) {
    Event e;
    e.kind = head.text == "witness" ? Event::Kind::Witness : Event::Kind::Request;
    e.guard_side = guard;
    expect(Tok::LParen);
    auto agent_arg = [&]() {
      Token t = expect(Tok::Ident);
      const Param* p = role.find_var(t.text);
      if (!p) fail(t, "unbound identifier '" + t.text + "'");
      if (p->kind != VarKind::Agent) fail(t, "'" + t.text + "' is not an agent");
      return t.text;
    };
    e.actor = agent_arg();
    expect(Tok::Comma);
    e.peer = agent_arg();
    expect(Tok::Comma);
    Token id = expect(Tok::Ident);
    e.protocol_id = id.text;
    pending_ids_.push_back({id.text, id.line, id.column, false});
    expect(Tok::Comma);
    e.value = parse_pattern(role, uses);
    expect(Tok::RParen);
    return e;
  }

  bool is_channel(const RoleSpec& role, const Token& t) const {
    const Param* p = role.find_var(t.text);
    return p && p->kind == VarKind::Channel;
  }

  bool at_transition_start() const { return peek().kind == Tok::Number && peek(1).kind == Tok::Dot; }

  void parse_transitions(RoleSpec& role) {
    std::set<std::string> labels;
    std::set<std::uint32_t> sources;
    label_tokens_.clear();
    while (at_transition_start()) {
      Token label = next();
      expect(Tok::Dot);
      if (!labels.insert(label.text).second) fail(label, "duplicate transition label '" + label.text + "'");
      label_tokens_[label.text] = label;
      Transition tr;
      tr.label = label.text;
      bool has_guard = false;
      std::vector<VarUse> recv_uses, out_uses;

      do {
        Token head = expect(Tok::Ident);
        if (head.text == role.state_var && peek().kind == Tok::Eq) {
          next();
          tr.from_state = static_cast<std::uint32_t>(std::stoul(expect(Tok::Number).text));
          has_guard = true;
        } else if (is_channel(role, head)) {
          if (tr.receive) fail(head, "more than one receive in transition " + tr.label);
          expect(Tok::LParen);
          tr.receive = parse_pattern(role, recv_uses);
          expect(Tok::RParen);
        } else if (head.text == "witness" || head.text == "request") {
          tr.events.push_back(parse_event(role, head, true, out_uses));
        } else {
          fail(head, "unexpected '" + head.text + "' in transition guard");
        }
      } while (accept(Tok::And));
      if (!has_guard) fail(label, "transition " + tr.label + " has no state guard");
      expect(Tok::Arrow);

      bool has_target = false;
      do {
        Token head = expect(Tok::Ident);
        if (peek().kind == Tok::Prime && peek(1).kind == Tok::Assign) {
          next();
          next();
          if (head.text == role.state_var) {
            tr.to_state = static_cast<std::uint32_t>(std::stoul(expect(Tok::Number).text));
            has_target = true;
          } else {
            const Param* p = role.find_var(head.text);
            if (!p) fail(head, "unbound identifier '" + head.text + "'");
            expect_word("new");
            expect(Tok::LParen);
            expect(Tok::RParen);
            tr.fresh.push_back(head.text);
          }
        } else if (is_channel(role, head)) {
          if (tr.send) fail(head, "more than one send in transition " + tr.label);
          expect(Tok::LParen);
          tr.send = parse_pattern(role, out_uses);
          expect(Tok::RParen);
        } else if (head.text == "witness" || head.text == "request") {
          tr.events.push_back(parse_event(role, head, false, out_uses));
        } else {
          fail(head, "unexpected '" + head.text + "' in transition action");
        }
      } while (accept(Tok::And));
      if (!has_target) fail(label, "transition " + tr.label + " assigns no next state");

      // A primed variable reads this transition's new value; outside a
      // receive or new() there is none, so it falls back to the current one.
      std::set<std::string> assigned(tr.fresh.begin(), tr.fresh.end());
      for (const auto& u : recv_uses)
        if (u.primed) assigned.insert(u.var);
      for (const auto& u : out_uses) {
        if (u.primed && !assigned.count(u.var)) {
          warn(u.line, u.column,
               "primed variable " + u.var + "' is not assigned in transition " + tr.label + " of role " + role.name +
                   "; read as the current value of " + u.var);
        }
      }
      role.transitions.push_back(std::move(tr));
    }
  }

  void check_role(const RoleSpec& role, const Token& at) {
    auto reach = role.reachable_states();
    for (const auto& t : role.transitions) {
      if (!reach.count(t.from_state)) {
        auto it = label_tokens_.find(t.label);
        fail(it == label_tokens_.end() ? at : it->second, "transition " + t.label + " of role " + role.name + " starts from unreachable state " +
                     std::to_string(t.from_state));
      }
    }
  }

  void parse_goals() {
    while (!is_word("end")) {
      Token kind = expect(Tok::Ident);
      if (kind.text != "authentication_on") fail(kind, "unsupported goal '" + kind.text + "'");
      Token id = expect(Tok::Ident);
      pending_ids_.push_back({id.text, id.line, id.column, true});
      result_.model.goals.push_back({id.text});
    }
    expect_word("end");
    expect_word("goal");
  }

  void check_call(const Call& c, const std::pair<std::size_t, std::size_t>& pos, const std::set<std::string>& scope,
                  std::size_t expected_arity) {
    if (c.args.size() != expected_arity) {
      throw ParseError({file_, pos.first, pos.second, Diagnostic::Severity::Error,
                        "call to '" + c.role + "' has " + std::to_string(c.args.size()) + " arguments, expected " +
                            std::to_string(expected_arity)});
    }
    for (const auto& a : c.args) {
      if (!scope.count(a)) {
        throw ParseError({file_, pos.first, pos.second, Diagnostic::Severity::Error,
                          "unbound identifier '" + a + "' in call to '" + c.role + "'"});
      }
    }
  }

  void check_semantics() {
    auto& m = result_.model;
    std::set<std::string> protocol_ids;
    std::set<std::string> env_scope{std::string(intruder_agent)};
    for (const auto& c : m.environment.consts) {
      env_scope.insert(c.name);
      if (c.kind == VarKind::ProtocolId) protocol_ids.insert(c.name);
    }
    for (const auto& p : pending_ids_) {
      if (!protocol_ids.count(p.id)) {
        throw ParseError({file_, p.line, p.column, Diagnostic::Severity::Error,
                          p.goal ? "goal names undeclared protocol_id '" + p.id + "'"
                                 : "unbound identifier '" + p.id + "' (not a declared protocol_id)"});
      }
    }
    for (const auto& k : m.environment.intruder_knowledge) {
      if (!env_scope.count(k)) {
        throw ParseError({file_, ik_pos_.first, ik_pos_.second, Diagnostic::Severity::Error,
                          "unbound identifier '" + k + "' in intruder_knowledge"});
      }
    }

    auto arity = [&](const std::string& role, const std::pair<std::size_t, std::size_t>& pos) -> std::size_t {
      if (const RoleSpec* r = m.find_role(role)) return r->params.size();
      for (const auto& s : m.session_roles)
        if (s.name == role) return s.params.size();
      throw ParseError({file_, pos.first, pos.second, Diagnostic::Severity::Error, "unknown role '" + role + "'"});
    };

    const auto& env_pos = composition_pos_[m.environment.name];
    for (std::size_t i = 0; i < m.environment.composition.size(); ++i) {
      const auto& c = m.environment.composition[i];
      check_call(c, env_pos.at(i), env_scope, arity(c.role, env_pos.at(i)));
    }

    for (const auto& s : m.session_roles) {
      std::set<std::string> scope;
      for (const auto& p : s.params) scope.insert(p.name);
      for (const auto& l : s.locals) scope.insert(l.name);
      const auto& pos = composition_pos_[s.name];
      for (std::size_t i = 0; i < s.composition.size(); ++i) {
        const auto& c = s.composition[i];
        if (!m.find_role(c.role)) {
          throw ParseError({file_, pos.at(i).first, pos.at(i).second, Diagnostic::Severity::Error,
                            "session '" + s.name + "' composes unknown basic role '" + c.role + "'"});
        }
        check_call(c, pos.at(i), scope, arity(c.role, pos.at(i)));
      }
      warn_shared_channels(s, pos);
    }
  }

  void warn_shared_channels(const SessionRole& s, const std::vector<std::pair<std::size_t, std::size_t>>& pos) {
    std::set<std::string> channels;
    for (const auto& l : s.locals)
      if (l.kind == VarKind::Channel) channels.insert(l.name);
    for (const auto& p : s.params)
      if (p.kind == VarKind::Channel) channels.insert(p.name);
    for (std::size_t i = 0; i < s.composition.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        std::vector<std::string> shared;
        for (const auto& a : s.composition[i].args) {
          if (!channels.count(a)) continue;
          for (const auto& b : s.composition[j].args)
            if (a == b) shared.push_back(a);
        }
        if (shared.empty()) continue;
        std::string list;
        for (const auto& c : shared) list += (list.empty() ? "" : ",") + c;
        warn(pos.at(i).first, pos.at(i).second,
             "channels " + list + " are shared by " + s.composition[j].role + " and " + s.composition[i].role +
                 " in session " + s.name + "; the network is a single intruder-controlled pool");
      }
    }
  }

  std::vector<Token> toks_;
  std::string file_;
  std::size_t pos_ = 0;
  ParseResult result_;
  std::set<std::string> role_names_;
  std::map<std::string, Token> label_tokens_;
  std::vector<PendingIdCheck> pending_ids_;
  std::vector<std::pair<std::size_t, std::size_t>> call_pos_;
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> composition_pos_;
  std::pair<std::size_t, std::size_t> ik_pos_{0, 0};
};

}  // namespace

ParseResult parse_hlpsl(std::string_view source, std::string file) {
  auto toks = Lexer(source, file).run();
  return Parser(std::move(toks), std::move(file)).run();
}

ParseResult parse_hlpsl_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_hlpsl(ss.str(), path);
}

}  // namespace oat::hlpsl
