// Copyright 2026 The Convex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "convex/dialogue/dialogue.hpp"

#include <algorithm>
#include <set>

#include "convex/common/text.hpp"
#include "convex/storyteller/story.hpp"

namespace convex::dialogue {

namespace {

using executor::Session;
using executor::Speaker;
using executor::Turn;
using intent::ActionClass;
using intent::Rating;
using nlohmann::json;
using planner::MetaPattern;
using planner::NodeKind;

constexpr ActionClass kLadder[] = {ActionClass::Correlate, ActionClass::Cluster,
                                   ActionClass::PlotRequest, ActionClass::EndSession};

bool contains(const std::vector<std::string>& v, std::string_view x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

bool ladder_done(const Session& s, ActionClass a, const std::vector<std::string>& ops) {
  switch (a) {
    case ActionClass::Correlate: return contains(ops, "correlation_matrix");
    case ActionClass::Cluster: return contains(ops, "cluster");
    case ActionClass::PlotRequest: return contains(ops, "plot_centroids");
    case ActionClass::EndSession: return s.story_artifact.has_value();
    default: return true;
  }
}

bool ladder_ready(ActionClass a, const std::vector<std::string>& ops) {
  switch (a) {
    case ActionClass::Correlate: return contains(ops, "profile");
    case ActionClass::Cluster: return contains(ops, "correlation_matrix");
    default: return contains(ops, "cluster");
  }
}

// Everything one user request produces, and the session it works on.
class Run {
 public:
  Run(const Resources& res, Session& s, UserProfile& profile,
      const std::vector<HistoryRecord>& history)
      : res_(res), s_(s), profile_(profile), history_(history) {}

  std::vector<Turn> replies;

  void user_turn(std::string text, json meta) {
    Turn t;
    t.speaker = Speaker::User;
    t.text = std::move(text);
    t.meta = std::move(meta);
    push(std::move(t));
  }

  Turn& bot(std::string text, std::optional<MetaPattern> pattern,
            std::vector<std::string> artifacts = {}, json meta = json::object()) {
    Turn t;
    t.speaker = Speaker::Bot;
    t.text = std::move(text);
    t.pattern = pattern;
    t.artifacts = std::move(artifacts);
    t.meta = std::move(meta);
    push(t);
    replies.push_back(s_.turns.back());
    return s_.turns.back();
  }

  Turn& say(std::string_view key, MetaPattern pattern,
            const std::map<std::string, std::string>& vars = {}) {
    return bot(res_.catalog->render(key, vars), pattern);
  }

  void dispatch(const intent::Intent& in);
  void run_intent(const intent::Intent& in);
  void advance(bool quiet_upload_request = false);
  void end();
  void answer(int node_id, const json& value);
  void rate_question(Rating r);
  void resolve_defaults();
  void offer_suggestion();
  std::optional<json> answer_for(const executor::PendingQuestion& q, const intent::Intent& in) const;

 private:
  void push(Turn t) {
    t.index = s_.turns.size();
    t.timestamp = s_.now();
    s_.turns.push_back(std::move(t));
  }

  MetaPattern pattern_of(int node_id) const {
    auto it = s_.node_patterns.find(node_id);
    return it == s_.node_patterns.end() ? MetaPattern::P2_AnalyticsTask : it->second;
  }

  void adopt_plan(planner::Plan plan, const std::string& template_name) {
    const int old_max = s_.plan ? s_.plan->max_id() : 0;
    const auto* t = res_.templates->find(template_name);
    for (const auto& n : plan.nodes) {
      if (n.id > old_max) s_.node_patterns[n.id] = t ? t->pattern : plan.origin_pattern;
    }
    s_.plan = std::move(plan);
  }

  void node_turns(int id, bool quiet_upload_request);
  void failure_turn(const executor::StepError& e);

  const Resources& res_;
  Session& s_;
  UserProfile& profile_;
  const std::vector<HistoryRecord>& history_;
};

const std::vector<HistoryRecord> kNoHistory;

void Run::node_turns(int id, bool quiet_upload_request) {
  const auto& node = *s_.plan->find(id);
  const auto* entry = res_.registry->find(node.op_name);
  const MetaPattern pattern = pattern_of(id);
  if (node.kind == NodeKind::BotRequest && entry && !entry->asks && !entry->question.empty()) {
    if (!quiet_upload_request) say(entry->question, pattern);
    return;
  }
  for (const auto& aid : node.outputs) {
    const auto& a = s_.require_artifact(aid);
    if (!a.visible) continue;
    // Plots that come with an analysis are offered output.
    const bool offered = a.kind == executor::ArtifactKind::PlotSvg &&
                         pattern == MetaPattern::P2_AnalyticsTask;
    bot(a.explanation, offered ? MetaPattern::P5_BotOffersOutput : pattern, {a.id});
  }
}

void Run::failure_turn(const executor::StepError& e) {
  const std::string recovery = e.op_name() == "cluster" ? "reply.recovery.cluster"
                                                        : "reply.recovery.default";
  say("reply.error", MetaPattern::P4_BotRequestsInput,
      {{"op", e.op_name()},
       {"detail", e.what()},
       {"recovery", res_.catalog->text(recovery)}});
}

void Run::advance(bool quiet_upload_request) {
  executor::StepOutcome out;
  try {
    out = executor::step(s_, *res_.registry);
  } catch (const executor::StepError& e) {
    for (int id : e.partial().ran) node_turns(id, quiet_upload_request);
    failure_turn(e);
    s_.pending.reset();
    return;
  }
  for (int id : out.ran) node_turns(id, quiet_upload_request);
  s_.pending.reset();
  if (out.awaiting) {
    const auto& node = *s_.plan->find(*out.awaiting);
    const auto* entry = res_.registry->find(node.op_name);
    std::string key = entry ? entry->question : "";
    std::map<std::string, std::string> vars;
    if (node.params.contains("await")) {
      key = node.params["await"]["key"].get<std::string>();
      vars = node.params["await"]["vars"].get<std::map<std::string, std::string>>();
    }
    const bool blocking = entry && entry->blocking;
    s_.pending = executor::PendingQuestion{node.id, key, blocking};
    if (!key.empty()) {
      MetaPattern p = pattern_of(node.id) == MetaPattern::P1_DataPreparation
                          ? MetaPattern::P1_DataPreparation
                          : MetaPattern::P4_BotRequestsInput;
      auto& t = say(key, p, vars);
      t.meta = {{"question_node", node.id}, {"key", key}};
      replies.back().meta = t.meta;
    }
    return;
  }
  offer_suggestion();
}

void Run::offer_suggestion() {
  if (s_.pending || s_.status != executor::SessionStatus::Active) return;
  auto sug = propose_proactive(s_, profile_, history_);
  if (!sug) return;
  s_.suggestion = sug;
  s_.suggestions_offered[std::string(intent::to_string(sug->action))] += 1;
  auto& t = say("suggest." + std::string(intent::to_string(sug->action)),
                MetaPattern::P6_Proactive);
  t.meta = {{"suggestion", intent::to_string(sug->action)},
            {"rationale", sug->rationale},
            {"score", sug->score}};
  replies.back().meta = t.meta;
}

void Run::answer(int node_id, const json& value) {
  executor::provide_user_input(s_, node_id, value, *res_.registry);
  s_.pending.reset();
  advance();
}

// Answers a pending feedback question with a rating, attached to the last
// result shown before it.
void Run::rate_question(Rating r) {
  const int node_id = s_.pending->node_id;
  for (size_t i = s_.turns.size(); i-- > 0;) {
    const auto& t = s_.turns[i];
    if (t.speaker == Speaker::Bot && !t.artifacts.empty()) {
      Assistant(res_).record_feedback(s_, i, r, profile_);
      break;
    }
  }
  say("reply.feedback_thanks", MetaPattern::P4_BotRequestsInput);
  answer(node_id, intent::to_string(r));
}

// Non-blocking questions take their default answer when the user moves on.
void Run::resolve_defaults() {
  while (s_.pending && !s_.pending->blocking) {
    const auto& node = *s_.plan->find(s_.pending->node_id);
    json value = "none";
    if (node.params.contains("await")) {
      value = node.params["await"].value("default", json("all"));
    } else if (const auto* e = res_.registry->find(node.op_name); e && e->default_answer) {
      value = *e->default_answer;
    }
    answer(node.id, value);
  }
}

std::optional<json> Run::answer_for(const executor::PendingQuestion& q,
                                    const intent::Intent& in) const {
  const auto& node = *s_.plan->find(q.node_id);
  if (node.op_name == "choose_description") {
    if (in.slots.description) return json(*in.slots.description);
    if (in.action == ActionClass::DescribeStatistical) return json("statistical");
    if (in.action == ActionClass::DescribeStructural) return json("structural");
  }
  if (q.key == "ask.sheets" &&
      (in.action == ActionClass::TransformData || in.action == ActionClass::SelectSheet)) {
    if (in.slots.sheet_selector) {
      const auto& sel = *in.slots.sheet_selector;
      if (sel.mode == tabular::SheetSelection::Mode::Names) return json(sel.names);
      return json(sel.mode == tabular::SheetSelection::Mode::First ? "first" : "all");
    }
    return json("all");
  }
  if (node.op_name == "request_feedback" && in.action == ActionClass::ProvideFeedback) {
    return json(intent::to_string(in.slots.rating.value_or(Rating::Like)));
  }
  return std::nullopt;
}

void Run::dispatch(const intent::Intent& in) {
  switch (in.action) {
    case ActionClass::Unknown:
      say("reply.clarify", MetaPattern::P4_BotRequestsInput);
      if (s_.pending && s_.pending->blocking) {
        say("ask.upload", MetaPattern::P1_DataPreparation);
      }
      return;
    case ActionClass::PauseSession:
      say("reply.paused", MetaPattern::P3_ActionRequest, {{"session", s_.id}});
      executor::pause(s_);
      return;
    case ActionClass::ResumeSession:
      say("reply.already_active", MetaPattern::P3_ActionRequest);
      return;
    case ActionClass::EndSession:
      end();
      return;
    case ActionClass::ProvideFeedback: {
      const Rating r = in.slots.rating.value_or(Rating::Like);
      if (s_.pending) {
        const auto& node = *s_.plan->find(s_.pending->node_id);
        if (node.op_name == "request_feedback") {
          rate_question(r);
          return;
        }
      }
      for (size_t i = s_.turns.size(); i-- > 0;) {
        if (s_.turns[i].speaker == Speaker::Bot && !s_.turns[i].artifacts.empty()) {
          Assistant(res_).record_feedback(s_, i, r, profile_);
          say("reply.feedback_thanks", MetaPattern::P3_ActionRequest);
          return;
        }
      }
      say("reply.nothing_to_rate", MetaPattern::P3_ActionRequest);
      return;
    }
    case ActionClass::AcceptSuggestion:
    case ActionClass::RejectSuggestion: {
      const bool yes = in.action == ActionClass::AcceptSuggestion;
      if (s_.pending) {
        const auto q = *s_.pending;
        const auto& node = *s_.plan->find(q.node_id);
        if (node.op_name == "request_feedback") {
          rate_question(yes ? Rating::Like : Rating::Dislike);
        } else if (q.key == "ask.sheets") {
          if (yes) {
            answer(q.node_id, "all");
          } else {
            say("ask.sheets.which", MetaPattern::P4_BotRequestsInput,
                {{"names", join(s_.dataset->sheet_names, ", ")}});
          }
        } else if (node.op_name == "choose_description" && yes) {
          answer(q.node_id, "statistical");
        } else {
          say("ask.still_waiting", MetaPattern::P4_BotRequestsInput,
              {{"question", q.key.empty() ? res_.catalog->text("ask.upload")
                                          : res_.catalog->render(q.key, {})}});
        }
        return;
      }
      if (s_.suggestion) {
        auto sug = *s_.suggestion;
        s_.suggestion.reset();
        if (!yes) {
          say("reply.ok", MetaPattern::P3_ActionRequest);
          return;
        }
        s_.suggestions_accepted[std::string(intent::to_string(sug.action))] += 1;
        intent::Intent follow;
        follow.action = sug.action;
        if (sug.action == ActionClass::PlotRequest) follow.slots.plot_kind = "centroids";
        run_intent(follow);
        return;
      }
      say("reply.nothing_to_accept", MetaPattern::P4_BotRequestsInput);
      return;
    }
    default:
      break;
  }

  if (s_.pending) {
    const auto q = *s_.pending;
    if (auto value = answer_for(q, in)) {
      try {
        answer(q.node_id, *value);
      } catch (const executor::TypeMismatchError&) {
        say("ask.still_waiting", MetaPattern::P4_BotRequestsInput,
            {{"question", res_.catalog->render(q.key, {})}});
      }
      return;
    }
    if (q.blocking) {
      say(in.action == ActionClass::ExploreHandshake ? "ask.upload" : "ask.upload_first",
          MetaPattern::P1_DataPreparation);
      return;
    }
    resolve_defaults();
  }
  if (s_.suggestion) {
    if (s_.suggestion->action == in.action) {
      s_.suggestions_accepted[std::string(intent::to_string(in.action))] += 1;
    }
    s_.suggestion.reset();
  }
  run_intent(in);
}

void Run::run_intent(const intent::Intent& in) {
  if (in.action == ActionClass::EndSession) {
    end();
    return;
  }
  if (!s_.dataset) {
    if (!s_.plan) {
      intent::Intent hello;
      hello.action = ActionClass::ExploreHandshake;
      auto plan = planner::compile(hello, {false}, *res_.templates);
      auto name = plan.template_name;
      adopt_plan(std::move(plan), name);
      advance();
    } else {
      say("ask.upload_first", MetaPattern::P1_DataPreparation);
    }
    return;
  }
  if (in.action == ActionClass::ExploreHandshake) {
    say("reply.data_loaded", MetaPattern::P1_DataPreparation,
        {{"filename", s_.dataset->filename}});
    return;
  }
  try {
    planner::Plan plan = s_.plan ? planner::merge_followup(*s_.plan, in, {true}, *res_.templates)
                                 : planner::compile(in, {true}, *res_.templates);
    const std::string name =
        plan.merged_templates.empty() || !s_.plan ? plan.template_name : plan.merged_templates.back();
    adopt_plan(std::move(plan), name);
  } catch (const planner::NoTemplateError& e) {
    say("reply.error", MetaPattern::P4_BotRequestsInput,
        {{"op", std::string(intent::to_string(in.action))},
         {"detail", e.what()},
         {"recovery", res_.catalog->text("reply.recovery.default")}});
    return;
  }
  advance();
}

void Run::end() {
  resolve_defaults();
  try {
    auto turns = Assistant(res_).end_session(s_, profile_);
    replies.insert(replies.end(), turns.begin(), turns.end());
  } catch (const storyteller::EmptySessionError& e) {
    say("reply.error", MetaPattern::P4_BotRequestsInput,
        {{"op", "storytelling"},
         {"detail", e.what()},
         {"recovery", res_.catalog->text("reply.recovery.default")}});
  }
}

}  // namespace

nlohmann::json to_json(const UserProfile& p) {
  return {{"schema_version", 1},
          {"user_id", p.user_id},
          {"plot_kind_likes", p.plot_kind_likes},
          {"completed_sessions", p.completed_sessions}};
}

UserProfile profile_from_json(const nlohmann::json& j) {
  UserProfile p;
  p.user_id = j.at("user_id").get<std::string>();
  p.plot_kind_likes = j.at("plot_kind_likes").get<std::map<std::string, int>>();
  p.completed_sessions = j.at("completed_sessions").get<int>();
  return p;
}

double session_similarity(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 1.0;
  size_t common = 0;
  for (const auto& x : sa) common += sb.count(x);
  return static_cast<double>(common) / static_cast<double>(sa.size() + sb.size() - common);
}

std::vector<std::pair<std::string, double>> rank_history(
    const std::vector<HistoryRecord>& history, const std::vector<std::string>& ops) {
  std::vector<std::tuple<double, uint64_t, std::string>> scored;
  for (const auto& h : history) {
    scored.emplace_back(session_similarity(h.ops, ops), h.sequence, h.session_id);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::get<1>(x) > std::get<1>(y);
  });
  std::vector<std::pair<std::string, double>> out;
  for (auto& [sim, seq, id] : scored) out.emplace_back(std::move(id), sim);
  return out;
}

std::optional<executor::Suggestion> propose_proactive(const Session& s, const UserProfile& profile,
                                                      const std::vector<HistoryRecord>& history) {
  const auto ops = executor::executed_ops(s);
  std::optional<executor::Suggestion> best;
  for (ActionClass a : kLadder) {
    const std::string name(intent::to_string(a));
    if (!ladder_ready(a, ops) || ladder_done(s, a, ops)) continue;
    if (s.suggestions_offered.count(name)) continue;
    double offered = 0, accepted = 0;
    for (const auto& h : history) {
      const double w = session_similarity(h.ops, ops);
      auto o = h.offered.find(name);
      auto c = h.accepted.find(name);
      offered += w * (o == h.offered.end() ? 0 : o->second);
      accepted += w * (c == h.accepted.end() ? 0 : c->second);
    }
    const double rate = offered > 0 ? std::min(1.0, accepted / offered) : 0.0;
    const double score = 0.5 + 0.5 * rate;
    if (!best || score > best->score) {
      std::string rationale = "after " + std::string(a == ActionClass::Correlate ? "profile"
                                                     : a == ActionClass::Cluster ? "correlation"
                                                                                 : "cluster") +
                              "; historical acceptance " + format_fixed(rate, 2);
      if (a == ActionClass::PlotRequest && profile.plot_kind_likes.count("centroids")) {
        rationale += "; centroid plots liked " +
                     std::to_string(profile.plot_kind_likes.at("centroids")) + " times";
      }
      best = executor::Suggestion{a, rationale, score};
    }
  }
  return best;
}

Resources Resources::defaults() {
  return {&intent::default_vocabulary(), &planner::default_templates(),
          &executor::default_registry(), &default_catalog()};
}

Assistant::Assistant(Resources resources) : res_(resources) {}

executor::Session Assistant::open_session(std::string id, uint64_t seed,
                                          std::string user_id) const {
  Session s;
  s.id = std::move(id);
  s.seed = seed;
  s.user_id = std::move(user_id);
  s.vocabulary_version = res_.vocabulary->version();
  s.template_version = res_.templates->version();
  return s;
}

intent::SessionContext Assistant::context_of(const Session& s) const {
  intent::SessionContext ctx;
  ctx.question_pending = s.pending.has_value() || s.suggestion.has_value();
  if (s.dataset) {
    ctx.sheet_names = s.dataset->sheet_names;
    if (s.dataset->table_artifact) {
      if (const auto* a = s.artifact(*s.dataset->table_artifact)) {
        ctx.column_names = a->meta.value("columns", std::vector<std::string>{});
      }
    }
  }
  return ctx;
}

std::vector<Turn> Assistant::handle_turn(Session& s, std::string_view utterance,
                                         UserProfile& profile,
                                         const std::vector<HistoryRecord>& history) const {
  if (s.status != executor::SessionStatus::Active) {
    throw executor::SessionStateError("session " + s.id + " is " +
                                      std::string(executor::to_string(s.status)) +
                                      "; resume it before sending messages");
  }
  if (trim(utterance).empty()) throw EmptyMessageError("the message is empty");
  const auto in = intent::parse(utterance, *res_.vocabulary, context_of(s));
  return handle_intent(s, utterance, in, profile, history);
}

std::vector<Turn> Assistant::handle_intent(Session& s, std::string_view utterance,
                                           const intent::Intent& in, UserProfile& profile,
                                           const std::vector<HistoryRecord>& history) const {
  if (s.status != executor::SessionStatus::Active) {
    throw executor::SessionStateError("session " + s.id + " is " +
                                      std::string(executor::to_string(s.status)) +
                                      "; resume it before sending messages");
  }
  Run run(res_, s, profile, history);
  run.user_turn(std::string(utterance), {{"intent", intent::to_json(in)}});
  run.dispatch(in);
  return run.replies;
}

UploadOutcome Assistant::upload(Session& s, std::string filename, std::string bytes,
                                std::optional<tabular::SheetSelection> selection,
                                UserProfile& profile, const std::vector<HistoryRecord>& history,
                                std::optional<char> delimiter) const {
  if (s.status != executor::SessionStatus::Active) {
    throw executor::SessionStateError("session " + s.id + " is " +
                                      std::string(executor::to_string(s.status)) +
                                      "; resume it before uploading");
  }
  tabular::IngestOptions opts;
  opts.delimiter = delimiter;
  // Rejects unsupported formats before anything is recorded.
  tabular::list_sheets(bytes, filename, opts);

  Run run(res_, s, profile, history);
  bool auto_started = false;
  if (!s.plan) {
    intent::Intent hello;
    hello.action = ActionClass::ExploreHandshake;
    auto plan = planner::compile(hello, {false}, *res_.templates);
    for (const auto& n : plan.nodes) s.node_patterns[n.id] = plan.origin_pattern;
    s.plan = std::move(plan);
    auto_started = true;
  }
  const bool upload_pending = s.pending && s.plan->find(s.pending->node_id)->op_name == "upload";
  if (!auto_started && !upload_pending) {
    throw UploadConflictError("session " + s.id + " is not waiting for an upload");
  }
  json meta = {{"upload", filename}};
  // An upload that opens the conversation stands for the handshake.
  if (auto_started) meta["intent"] = {{"action", "ExploreHandshake"}};
  run.user_turn("Uploaded " + filename, std::move(meta));
  if (auto_started) {
    run.advance(true);
  }
  const int upload_node = s.pending->node_id;
  auto value = executor::stage_upload(s, filename, std::move(bytes), delimiter);
  executor::provide_user_input(s, upload_node, value, *res_.registry);
  s.pending.reset();
  if (selection) {
    for (int succ : s.plan->successors(upload_node)) {
      auto* n = s.plan->find(succ);
      if (n->op_name != "transform" && n->op_name != "select_sheet") continue;
      using Mode = tabular::SheetSelection::Mode;
      n->params["sheets"] = selection->mode == Mode::Names ? json(selection->names)
                            : selection->mode == Mode::First ? json("first")
                                                             : json("all");
    }
  }
  run.advance();

  UploadOutcome out;
  out.turns = run.replies;
  for (const auto& a : s.artifacts) {
    if (a.meta.contains("report")) out.report = a.meta["report"];
  }
  if (out.report.is_null()) {
    out.report = {{"source_format", s.dataset->format},
                  {"sheets_found", s.dataset->sheet_names.size()},
                  {"sheet_names", s.dataset->sheet_names},
                  {"sheets_transformed", json::array()},
                  {"tables", json::array()},
                  {"warnings", json::array()}};
  }
  return out;
}

void Assistant::record_feedback(Session& s, size_t turn_index, Rating rating,
                                UserProfile& profile) const {
  if (turn_index >= s.turns.size()) {
    throw NoSuchTurnError("session " + s.id + " has no turn " + std::to_string(turn_index));
  }
  Turn& t = s.turns[turn_index];
  if (t.speaker != Speaker::Bot) {
    throw NotABotTurnError("turn " + std::to_string(turn_index) + " was said by the user");
  }
  auto adjust = [&](Rating r, int delta) {
    if (r != Rating::Like) return;
    for (const auto& id : t.artifacts) {
      const auto* a = s.artifact(id);
      if (!a || a->kind != executor::ArtifactKind::PlotSvg) continue;
      int& n = profile.plot_kind_likes[a->meta.value("plot_kind", "plot")];
      n = std::max(0, n + delta);
    }
  };
  if (t.feedback) {
    s.warnings.push_back("turn " + std::to_string(turn_index) + " re-rated from " +
                         std::string(intent::to_string(*t.feedback)) + " to " +
                         std::string(intent::to_string(rating)));
    adjust(*t.feedback, -1);
  }
  t.feedback = rating;
  adjust(rating, +1);
}

std::vector<Turn> Assistant::end_session(Session& s, UserProfile& profile) const {
  if (s.status != executor::SessionStatus::Active &&
      s.status != executor::SessionStatus::Paused) {
    throw executor::SessionStateError("session " + s.id + " is already " +
                                      std::string(executor::to_string(s.status)));
  }
  auto doc = storyteller::build_story(s, *res_.catalog);
  executor::Artifact a;
  a.kind = executor::ArtifactKind::StoryDoc;
  a.title = doc.title;
  a.explanation = res_.catalog->text("explain.story");
  a.meta = {{"sections", json::array()}};
  for (const auto& sec : doc.sections) {
    a.meta["sections"].push_back({{"heading", sec.heading}, {"artifact_ids", sec.artifact_ids}});
  }
  const auto& stored = s.add_artifact(std::move(a), doc.markdown);
  s.story_artifact = stored.id;
  s.suggestion.reset();
  s.pending.reset();

  Run run(res_, s, profile, kNoHistory);
  run.bot(stored.explanation, MetaPattern::P5_BotOffersOutput, {stored.id});
  run.say("reply.goodbye", MetaPattern::P3_ActionRequest);
  s.status = executor::SessionStatus::Completed;
  profile.completed_sessions += 1;
  return run.replies;
}

}  // namespace convex::dialogue
