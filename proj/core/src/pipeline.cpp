#include "logistory/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "logistory/config.hpp"
#include "logistory/hashing.hpp"
#include "logistory/predicates.hpp"
#include "logistory/text.hpp"

namespace logistory {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void RefinementPolicy::validate() const {
  if (!(std::isfinite(tau1) && std::isfinite(tau2)) || tau1 < 0.0 || tau2 > 1.0 || !(tau1 < tau2)) {
    throw DomainError("refinement policy needs 0 <= tau1 < tau2 <= 1 (got tau1=" + num(tau1) +
                      ", tau2=" + num(tau2) + ")");
  }
  if (max_regenerations < 0 || max_edits < 0) throw DomainError("retry budgets must be >= 0");
}

void to_json(json& j, const RefinementPolicy& p) {
  j = json{{"tau1", p.tau1}, {"tau2", p.tau2}, {"max_regenerations", p.max_regenerations}, {"max_edits", p.max_edits}};
}

void from_json(const json& j, RefinementPolicy& p) {
  if (!j.is_object()) throw DomainError("refinement policy must be an object");
  static const std::set<std::string> known = {"tau1", "tau2", "max_regenerations", "max_edits"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw DomainError("unknown refinement policy key '" + k + "'");
  }
  RefinementPolicy out;
  out.tau1 = j.value("tau1", out.tau1);
  out.tau2 = j.value("tau2", out.tau2);
  out.max_regenerations = j.value("max_regenerations", out.max_regenerations);
  out.max_edits = j.value("max_edits", out.max_edits);
  out.validate();
  p = out;
}

std::string_view to_string(Branch b) {
  switch (b) {
    case Branch::regenerate:
      return "regenerate";
    case Branch::edit:
      return "edit";
    case Branch::accept:
      return "accept";
  }
  return "unknown";
}

Branch decide(double psi, const RefinementPolicy& policy) {
  if (psi < policy.tau1) return Branch::regenerate;
  if (psi < policy.tau2) return Branch::edit;
  return Branch::accept;
}

json run_summary_json(const RunResult& r) {
  json images = json::array();
  for (const auto& im : r.images) images.push_back(im);
  int regenerations = 0, edits = 0;
  for (const auto& e : r.trace) {
    if (e.action == TraceAction::regenerated) ++regenerations;
    if (e.action == TraceAction::edited) ++edits;
  }
  return json{{"run_id", r.run_id},         {"story_id", r.story_id},   {"complete", r.complete},
              {"panels", r.plan.panels.size()}, {"images", images},     {"flags", r.flags},
              {"regenerations", regenerations}, {"edits", edits},       {"trace_events", r.trace.size()}};
}

PipelineOptions pipeline_options_from_json(const json& j) {
  PipelineOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw DomainError("pipeline options must be an object");
  if (j.contains("policy")) o.policy = j.at("policy").get<RefinementPolicy>();
  if (j.contains("planner_parse_retries")) o.planner.parse_retries = j.at("planner_parse_retries").get<int>();
  if (j.contains("memory_chars")) o.memory_chars = j.at("memory_chars").get<std::size_t>();
  if (o.planner.parse_retries < 0) throw DomainError("planner_parse_retries must be >= 0");
  return o;
}

std::string config_fingerprint(const BackendRegistry& backends, const RefinementPolicy& policy) {
  json roles = json::object();
  for (const auto& role : backends.roles()) roles[role] = backends.find(role)->model_id;
  return sha256_hex(json{{"roles", roles}, {"policy", policy}}.dump()).substr(0, 16);
}

const std::vector<std::string>& required_pipeline_roles() {
  static const std::vector<std::string> roles = {"planner", "generator", "editor", "captioner", "monitor"};
  return roles;
}

// ---------------------------------------------------------------------------

struct StoryPipeline::State {
  std::unique_ptr<RunStore> store;
  std::string run_id;
  StoryRecord story;
  RefinementPolicy policy;
  std::string config_hash;
  std::string created_at;
  PlanBundle plan;
  CausalGraph graph;
  StateRecorder recorder;
  MemoryBuffer memory;
  std::vector<TraceEvent> trace;
  std::vector<PanelImage> images;
  std::vector<json> flags;
  std::size_t next_panel = 0;  // position in plan.panels
  int first_revision = 0;      // for the panel at next_panel
  int current_panel = 0;
  std::map<int, ImageOrigin> origins;  // revision -> origin, current panel only
};

StoryPipeline::StoryPipeline(const BackendRegistry& backends, const TemplateLibrary& templates,
                             PipelineOptions options)
    : backends_(backends), templates_(templates), options_(std::move(options)) {
  options_.policy.validate();
}

void StoryPipeline::check_roles() const {
  for (const auto& role : required_pipeline_roles()) {
    backends_.require(role, role_capability(role));
  }
}

namespace {

json run_doc(const std::string& run_id, const StoryRecord& story, const RefinementPolicy& policy,
             const std::string& config_hash, const std::string& status, const std::string& created_at) {
  return json{{"run_id", run_id}, {"story_id", story.id}, {"story", story},       {"policy", policy},
              {"config_hash", config_hash}, {"status", status}, {"created_at", created_at}};
}

AttemptSink call_sink(RunStore& store, const int& panel) {
  return [&store, &panel](const AttemptRecord& a) {
    json j = a;
    j.erase("latency_ms");  // wall-clock noise; keeps mock runs byte-identical
    j["panel"] = panel;
    store.append_call(j);
  };
}

ImageOrigin origin_of(TraceAction a) {
  switch (a) {
    case TraceAction::regenerated:
      return ImageOrigin::regenerated;
    case TraceAction::edited:
      return ImageOrigin::edited;
    default:
      return ImageOrigin::generated;
  }
}

bool terminal(TraceAction a) { return a == TraceAction::accepted || a == TraceAction::accepted_with_flag; }

}  // namespace

RunResult StoryPipeline::run(const StoryRecord& story, const std::filesystem::path& out_dir) {
  check_roles();
  if (std::filesystem::exists(out_dir / "run.json")) {
    throw RunError(out_dir.string() + " already holds a run; use resume");
  }
  State st;
  st.store = std::make_unique<RunStore>(out_dir);
  st.story = story;
  st.policy = options_.policy;
  st.config_hash = options_.config_hash.empty() ? config_fingerprint(backends_, st.policy) : options_.config_hash;
  st.run_id = sha256_hex(json{{"story", story}, {"config_hash", st.config_hash}}.dump()).substr(0, 16);
  st.created_at = utc_timestamp();
  st.memory = MemoryBuffer(options_.memory_chars);
  st.store->write_json("run.json", run_doc(st.run_id, story, st.policy, st.config_hash, "planning", st.created_at));

  StoryPlanner planner(backends_, templates_, options_.planner, call_sink(*st.store, st.current_panel));
  st.plan = planner.plan(story);
  st.store->write_json("plan.json", st.plan);
  st.graph = build_graph(st.plan.events);
  st.store->write_json("graph.json", st.graph.to_json());
  st.store->write_text("graph.dot", st.graph.to_dot());
  st.recorder = StateRecorder(st.plan.events);
  execute(st);
  return result_of(st);
}

RunResult StoryPipeline::resume(const std::filesystem::path& out_dir) {
  if (!std::filesystem::exists(out_dir / "run.json")) throw RunError(out_dir.string() + " holds no run");
  State st;
  st.store = std::make_unique<RunStore>(out_dir);
  const json doc = st.store->read_json("run.json");
  try {
    st.run_id = doc.at("run_id").get<std::string>();
    st.story = doc.at("story").get<StoryRecord>();
    st.policy = doc.at("policy").get<RefinementPolicy>();
    st.config_hash = doc.value("config_hash", std::string());
    st.created_at = doc.value("created_at", std::string());
  } catch (const std::exception& e) {
    throw RunError("run.json is malformed: " + std::string(e.what()));
  }
  st.memory = MemoryBuffer(options_.memory_chars);

  if (!st.store->exists("plan.json")) {
    // Interrupted while planning: nothing else was written yet.
    check_roles();
    StoryPlanner planner(backends_, templates_, options_.planner, call_sink(*st.store, st.current_panel));
    st.plan = planner.plan(st.story);
    st.store->write_json("plan.json", st.plan);
  } else {
    st.plan = st.store->read_json("plan.json").get<PlanBundle>();
  }
  st.graph = build_graph(st.plan.events);
  if (!st.store->exists("graph.json")) {
    st.store->write_json("graph.json", st.graph.to_json());
    st.store->write_text("graph.dot", st.graph.to_dot());
  }
  st.recorder = StateRecorder(st.plan.events);
  st.trace = st.store->read_trace();

  // Replay the trace: validate ordering and rebuild memory, recorder and images.
  const int panel_count = static_cast<int>(st.plan.panels.size());
  int open_panel = 0;  // panel with events but no terminal event yet
  int last_revision = -1;
  int expected_panel = 1;
  const TraceEvent* last_scored = nullptr;
  std::map<int, ImageOrigin> origins;
  for (std::size_t i = 0; i < st.trace.size(); ++i) {
    const TraceEvent& e = st.trace[i];
    auto fail = [&](const std::string& why) {
      throw RunError("corrupt trace: event seq " + std::to_string(e.seq) + " (panel " + std::to_string(e.panel) +
                     ", " + std::string(to_string(e.action)) + "): " + why);
    };
    if (e.seq != static_cast<int>(i) + 1) fail("expected seq " + std::to_string(i + 1));
    if (e.panel < 1 || e.panel > panel_count) fail("panel out of range");
    if (e.panel != expected_panel) {
      fail(e.panel < expected_panel ? "panel already accepted"
                                    : "panel " + std::to_string(expected_panel) + " has not been accepted");
    }
    if (open_panel == 0 && e.action != TraceAction::draft) fail("panel must start with a draft");
    open_panel = e.panel;
    const bool produces = e.action == TraceAction::draft || e.action == TraceAction::regenerated ||
                          e.action == TraceAction::edited;
    if (e.revision < 0) fail("missing revision");
    if (produces) {
      if (e.revision <= last_revision) fail("revision does not increase");
      last_revision = e.revision;
      origins[e.revision] = origin_of(e.action);
    } else if (e.revision != last_revision) {
      fail("refers to revision " + std::to_string(e.revision) + " but the latest is " +
           std::to_string(last_revision));
    }
    if (e.action == TraceAction::scored) {
      if (!e.psi) fail("scored event without psi");
      last_scored = &e;
    }
    if (terminal(e.action)) {
      if (!last_scored) fail("terminal event without a score");
      if (e.artifact.empty() || !st.store->exists(e.artifact)) fail("final artifact missing");
      const PanelSpec& panel = st.plan.panels[static_cast<std::size_t>(e.panel - 1)];
      PanelImage img;
      img.panel_index = e.panel;
      img.artifact_path = e.artifact;
      img.revision = e.revision;
      img.origin = origins.count(e.revision) ? origins[e.revision] : ImageOrigin::generated;
      img.media_type = media_type_for(e.artifact);
      st.images.push_back(img);
      if (e.action == TraceAction::accepted_with_flag) {
        st.flags.push_back({{"panel", e.panel}, {"flag", e.flag}, {"psi", *e.psi}});
      }
      MemoryEntry entry;
      const bool failed = e.caption == kCaptionPlaceholder;
      // The same rules the live run used, without touching any backend.
      entry.panel_index = e.panel;
      entry.caption = e.caption;
      entry.caption_failed = failed;
      if (!failed) entry.predicates = extract_predicates(e.caption, &st.plan.entities);
      entry.summary = summarize_entry(e.caption, entry.predicates);
      st.memory.append(entry);
      std::vector<int> pending;
      for (int k : panel.events) {
        if (!st.recorder.realized_events().count(k) &&
            std::find(pending.begin(), pending.end(), k) == pending.end()) {
          pending.push_back(k);
        }
      }
      st.recorder.apply_effects(pending, e.panel);
      open_panel = 0;
      last_revision = -1;
      last_scored = nullptr;
      origins.clear();
      ++expected_panel;
    }
  }
  st.next_panel = static_cast<std::size_t>(expected_panel - 1);
  st.first_revision = last_revision + 1;
  if (st.next_panel >= st.plan.panels.size()) {
    RunResult r = result_of(st);
    r.complete = true;
    return r;
  }
  check_roles();
  execute(st);
  return result_of(st);
}

void StoryPipeline::execute(State& st) {
  st.store->write_json("run.json",
                       run_doc(st.run_id, st.story, st.policy, st.config_hash, "running", st.created_at));
  try {
    for (; st.next_panel < st.plan.panels.size(); ++st.next_panel) {
      process_panel(st, st.plan.panels[st.next_panel], st.first_revision);
      st.first_revision = 0;
    }
  } catch (const std::exception& e) {
    json doc = run_doc(st.run_id, st.story, st.policy, st.config_hash, "interrupted", st.created_at);
    doc["error"] = e.what();
    doc["resume_panel"] = st.current_panel;
    st.store->write_json("run.json", doc);
    throw;
  }
  json doc = run_doc(st.run_id, st.story, st.policy, st.config_hash, "complete", st.created_at);
  doc["completed_at"] = utc_timestamp();
  st.store->write_json("run.json", doc);
}

void StoryPipeline::record(State& st, TraceEvent e) {
  e.seq = static_cast<int>(st.trace.size()) + 1;
  e.panel = st.current_panel;
  e.timestamp = utc_timestamp();
  st.store->append_trace(e);
  st.trace.push_back(std::move(e));
}

PanelImage StoryPipeline::render(State& st, const PanelSpec& panel, int revision, const std::string& negative) {
  BackendRequest req;
  req.capability = Capability::generate_image;
  req.payload = {{"template", "render"}, {"prompt", panel.rendering_prompt}, {"panel", panel.index}, {"seed", revision}};
  if (!negative.empty()) req.payload["negative_prompt"] = negative;
  const BackendResponse resp = backends_.call("generator", req, call_sink(*st.store, st.current_panel));
  if (resp.image_bytes.empty()) throw BackendError(BackendErrorKind::bad_request, "generator returned no image");
  PanelImage img;
  img.panel_index = panel.index;
  img.revision = revision;
  img.media_type = resp.media_type.empty() ? "image/png" : resp.media_type;
  img.artifact_path = RunStore::panel_artifact(panel.index, revision, extension_for(img.media_type));
  write_file_bytes(st.store->path(img.artifact_path), resp.image_bytes);
  return img;
}

PanelImage StoryPipeline::edit(State& st, const PanelImage& current, const std::string& instruction, int revision) {
  BackendRequest req;
  req.capability = Capability::edit_image;
  req.payload = {{"instruction", instruction}, {"panel", current.panel_index}, {"revision", revision}};
  req.images.push_back({st.store->path(current.artifact_path), current.media_type});
  const BackendResponse resp = backends_.call("editor", req, call_sink(*st.store, st.current_panel));
  if (resp.image_bytes.empty()) throw BackendError(BackendErrorKind::bad_request, "editor returned no image");
  PanelImage img;
  img.panel_index = current.panel_index;
  img.revision = revision;
  img.origin = ImageOrigin::edited;
  img.media_type = resp.media_type.empty() ? current.media_type : resp.media_type;
  img.artifact_path = RunStore::panel_artifact(current.panel_index, revision, extension_for(img.media_type));
  write_file_bytes(st.store->path(img.artifact_path), resp.image_bytes);
  return img;
}

void StoryPipeline::process_panel(State& st, const PanelSpec& panel, int first_revision) {
  st.current_panel = panel.index;
  const RefinementPolicy& policy = st.policy;
  LocalMonitor monitor(backends_, templates_, &st.plan.entities, call_sink(*st.store, st.current_panel));

  int revision = first_revision;
  PanelImage image = render(st, panel, revision, "");
  {
    TraceEvent e;
    e.action = TraceAction::draft;
    e.revision = revision;
    e.artifact = image.artifact_path;
    e.fingerprint = sha256_hex(read_file_bytes(st.store->path(image.artifact_path)));
    record(st, std::move(e));
  }

  int regenerations = 0;
  int edits = 0;
  for (;;) {
    const PlausibilityScore score = monitor.score_panel(image, st.store->dir(), st.memory);
    const Branch branch = decide(score.value, policy);
    std::string decision;
    if (branch == Branch::accept) {
      decision = "accept";
    } else if (branch == Branch::regenerate && regenerations < policy.max_regenerations) {
      decision = "regenerate";
    } else if (edits < policy.max_edits) {
      decision = "edit";
    } else {
      decision = "flag";
    }
    {
      TraceEvent e;
      e.action = TraceAction::scored;
      e.revision = revision;
      e.psi = score.value;
      e.decision = decision;
      e.justification = score.justification;
      e.caption = score.caption;
      if (branch == Branch::regenerate && decision == "edit") e.detail = {{"escalated", true}};
      record(st, std::move(e));
    }

    if (decision == "accept" || decision == "flag") {
      PanelImage final_image = image;
      final_image.artifact_path = RunStore::final_artifact(panel.index, extension_for(image.media_type));
      write_file_bytes(st.store->path(final_image.artifact_path),
                       read_file_bytes(st.store->path(image.artifact_path)));
      TraceEvent e;
      e.action = decision == "accept" ? TraceAction::accepted : TraceAction::accepted_with_flag;
      e.revision = revision;
      e.psi = score.value;
      e.caption = score.caption;
      e.artifact = final_image.artifact_path;
      if (decision == "flag") {
        e.flag = "low-confidence";
        st.flags.push_back({{"panel", panel.index}, {"flag", e.flag}, {"psi", score.value}});
      }
      record(st, std::move(e));
      st.images.push_back(final_image);
      finish_panel(st, panel, score.caption);
      return;
    }

    if (decision == "regenerate") {
      ++regenerations;
      ++revision;
      // Same rendering prompt; the monitor's complaint becomes negative guidance.
      image = render(st, panel, revision, score.justification);
      image.origin = ImageOrigin::regenerated;
      TraceEvent e;
      e.action = TraceAction::regenerated;
      e.revision = revision;
      e.artifact = image.artifact_path;
      e.justification = score.justification;
      e.fingerprint = sha256_hex(read_file_bytes(st.store->path(image.artifact_path)));
      record(st, std::move(e));
      continue;
    }

    // Edit path: global verification, then an instructed edit.
    ++edits;
    const std::vector<StatePredicate> observed = extract_predicates(score.caption, &st.plan.entities);
    RefinementInstruction r = verify_panel(st.graph, st.recorder, panel, observed, st.plan.events);
    InstructionContext ctx{&backends_, &templates_, score.caption, call_sink(*st.store, st.current_panel)};
    render_instruction(r, st.graph, st.recorder, panel, st.plan.events, ctx);
    std::string instruction = r.instruction_text;
    std::string source = r.instruction_source;
    if (instruction.empty()) {
      instruction = score.justification.empty()
                        ? "Redraw the panel so it shows: " + panel.scene_description
                        : "Revise the panel so it is consistent with the story so far. " + score.justification;
      source = "monitor";
    }
    StateTransition tr;
    tr.pre = st.recorder.current().predicates();
    tr.action = panel.actions;
    tr.post = observed;
    const TransitionResult transition = validate_transition(st.graph, tr);
    json detail = r;
    detail["instruction_source"] = source;
    detail["transition"] = {{"verdict", to_string(transition.verdict)},
                            {"pre_node", transition.pre_node},
                            {"post_node", transition.post_node}};
    {
      TraceEvent e;
      e.action = TraceAction::verified;
      e.revision = revision;
      e.instruction = instruction;
      e.detail = std::move(detail);
      record(st, std::move(e));
    }
    ++revision;
    image = edit(st, image, instruction, revision);
    TraceEvent e;
    e.action = TraceAction::edited;
    e.revision = revision;
    e.instruction = instruction;
    e.artifact = image.artifact_path;
    e.fingerprint = sha256_hex(read_file_bytes(st.store->path(image.artifact_path)));
    record(st, std::move(e));
  }
}

void StoryPipeline::finish_panel(State& st, const PanelSpec& panel, const std::string& caption) {
  LocalMonitor monitor(backends_, templates_, &st.plan.entities);
  st.memory.append(monitor.make_entry(panel.index, caption, caption == kCaptionPlaceholder));
  std::vector<int> pending;
  for (int k : panel.events) {
    if (!st.recorder.realized_events().count(k) && std::find(pending.begin(), pending.end(), k) == pending.end()) {
      pending.push_back(k);
    }
  }
  st.recorder.apply_effects(pending, panel.index);
}

RunResult StoryPipeline::result_of(const State& st) const {
  RunResult r;
  r.run_id = st.run_id;
  r.story_id = st.story.id;
  r.images = st.images;
  r.trace = st.trace;
  r.plan = st.plan;
  r.flags = st.flags;
  r.complete = st.images.size() == st.plan.panels.size();
  return r;
}

RunResult run_story(const StoryRecord& story, const RefinementPolicy& policy, const BackendRegistry& backends,
                    const std::filesystem::path& out_dir) {
  static const TemplateLibrary templates;
  PipelineOptions o;
  o.policy = policy;
  return StoryPipeline(backends, templates, o).run(story, out_dir);
}

RunResult resume_run(const std::filesystem::path& out_dir, const BackendRegistry& backends) {
  static const TemplateLibrary templates;
  return StoryPipeline(backends, templates).resume(out_dir);
}

// ---------------------------------------------------------------------------

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw DomainError("percentile rank must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

ThresholdCalibration calibrate_thresholds(const std::vector<CalibrationSample>& samples) {
  std::vector<double> low, high;
  for (const auto& s : samples) {
    if (!std::isfinite(s.psi) || !std::isfinite(s.rating)) throw DomainError("calibration sample is not finite");
    if (s.rating < 2.0) low.push_back(s.psi);
    if (s.rating > 4.0) high.push_back(s.psi);
  }
  if (low.empty()) throw DomainError("calibration needs panels rated below 2");
  if (high.empty()) throw DomainError("calibration needs panels rated above 4");
  ThresholdCalibration c;
  c.tau1 = percentile(low, 90.0);
  c.tau2 = percentile(high, 10.0);
  c.low_count = low.size();
  c.high_count = high.size();
  return c;
}

}  // namespace logistory
