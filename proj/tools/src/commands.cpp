#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "mcg/container.hpp"
#include "mcg/error.hpp"
#include "mcg/evaluation.hpp"
#include "mcg/records.hpp"

namespace mcg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path g_active_run;

constexpr const char* kMarker = "INCOMPLETE";

/// A run directory: INCOMPLETE marker and config snapshot up front,
/// run.json written and the marker removed only on success.
class RunDir {
public:
    RunDir(fs::path dir, std::string command, const RunConfig& config)
        : dir_(std::move(dir)), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
        fs::remove(dir_ / "run.json");
        std::ofstream(dir_ / kMarker) << command_ << " started\n";
        save_json(config.to_json(), dir_ / "config.json");
        g_active_run = dir_;
    }

    [[nodiscard]] const fs::path& path() const { return dir_; }
    fs::path operator/(const std::string& name) const { return dir_ / name; }

    void finish(json record) {
        record["command"] = command_;
        record["status"] = "complete";
        record["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        save_json(record, dir_ / "run.json");
        fs::remove(dir_ / kMarker);
        g_active_run.clear();
        std::cout << command_ << ": wrote " << dir_.string() << "\n";
    }

private:
    fs::path dir_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
};

json seeds_json(const RunConfig& c) {
    return {{"backbone_init", c.backbone.seed},
            {"train", c.train.seed},
            {"synth", c.synth.seed},
            {"guidance_noise", c.guidance.seed},
            {"pattern_noise", c.guidance.pattern_seed}};
}

void require_file(const std::string& value, const std::string& what) {
    if (value.empty()) throw ValidationError(what + " is required");
    if (!fs::exists(value)) throw ValidationError(what + " not found: " + value);
}

struct LoadedBackbone {
    Backbone net;
    json hash;
};

LoadedBackbone load_backbone(const std::string& dir) {
    require_file(dir, "checkpoint (--checkpoint)");
    Backbone net = load_checkpoint(dir);
    json hash = {{"weights", content_hash(fs::path(dir) / "weights.mcgt")},
                 {"manifest", content_hash(fs::path(dir) / "backbone.json")}};
    return {std::move(net), std::move(hash)};
}

PixelVideo load_video(const std::string& path) {
    Tensor t = read_container(path);
    if (t.rank() != 4 || t.dim(0) != 3) {
        throw ValidationError("video " + path + " must have shape [3, F, H, W], got " + shape_to_string(t.shape()));
    }
    return PixelVideo{std::move(t)};
}

void write_video(const PixelVideo& v, const fs::path& path) {
    write_container(v.data, path, {{"kind", "pixel-video"}});
}

TrajectorySpec resolve_trajectory(const std::string& spec, std::size_t frames) {
    if (fs::exists(spec)) return trajectory_from_json(load_json(spec));
    const auto names = benchmark_trajectory_names();
    const auto it = std::find(names.begin(), names.end(), spec);
    if (it == names.end()) {
        std::string known;
        for (const auto& n : names) known += " " + n;
        throw ValidationError("trajectory '" + spec + "' is neither a file nor a benchmark name (" + known.substr(1) + ")");
    }
    return benchmark_trajectories(frames).at(static_cast<std::size_t>(it - names.begin()));
}

class TraceWriter {
public:
    explicit TraceWriter(const fs::path& path) : out_(path) { out_ << "t\tloss\tgrad_norm\tseconds\n"; }
    TraceSink sink() {
        return [this](const TraceRecord& r) {
            out_ << r.t << '\t' << r.loss << '\t' << r.grad_norm << '\t' << r.seconds << '\n';
            out_.flush();
        };
    }

private:
    std::ofstream out_;
};

double final_loss(const GuidanceTrace& trace) { return trace.records.empty() ? 0.0 : trace.records.back().loss; }

std::vector<LabeledVideo> load_corpus(const std::string& path) {
    LoadedTensor loaded = read_container_full(path);
    const Tensor& t = loaded.tensor;
    if (t.rank() != 5 || t.dim(1) != 3) throw ValidationError("corpus must have shape [N, 3, F, H, W]");
    const auto it = loaded.metadata.find("labels");
    if (it == loaded.metadata.end()) throw FormatError("corpus " + path + " has no labels");
    std::vector<std::size_t> labels;
    std::stringstream ss(it->second);
    for (std::string item; std::getline(ss, item, ',');) labels.push_back(std::stoul(item));
    if (labels.size() != t.dim(0)) throw FormatError("corpus label count does not match the video count");
    const std::size_t per = t.size() / t.dim(0);
    std::vector<LabeledVideo> out(t.dim(0));
    for (std::size_t n = 0; n < out.size(); ++n) {
        Tensor v({3, t.dim(2), t.dim(3), t.dim(4)});
        std::copy_n(t.data() + n * per, per, v.data());
        out[n].video = PixelVideo{std::move(v)};
        out[n].label = labels[n];
    }
    return out;
}

void save_corpus(const std::vector<LabeledVideo>& corpus, const fs::path& path) {
    const Shape& s = corpus.front().video.data.shape();
    Tensor t({corpus.size(), s[0], s[1], s[2], s[3]});
    std::string labels;
    for (std::size_t n = 0; n < corpus.size(); ++n) {
        const Tensor& v = corpus[n].video.data;
        std::copy(v.values().begin(), v.values().end(), t.data() + n * v.size());
        labels += (n ? "," : "") + std::to_string(corpus[n].label);
    }
    write_container(t, path, {{"kind", "corpus"}, {"labels", labels}});
}

json pattern_index(const CorrelationPattern& p) {
    return {{"point", p.point},
            {"source_frame", p.source_frame},
            {"anchor", {p.anchor.j, p.anchor.k}},
            {"first_target", p.first_target()},
            {"count", p.count()}};
}

json tracks_json(const std::vector<std::vector<PointTrack>>& tracks) {
    json out = json::array();
    for (std::size_t p = 0; p < tracks.size(); ++p)
        for (const auto& tr : tracks[p]) {
            json cells = json::array();
            for (const auto& c : tr.cells) cells.push_back({c.j, c.k});
            out.push_back({{"point", p},
                           {"layer", tr.layer_id},
                           {"start_frame", tr.start_frame},
                           {"cells", cells},
                           {"flat_frames", std::count(tr.flat.begin(), tr.flat.end(), true)}});
        }
    return out;
}

/// One container per layer: maps stacked as [n, H_l, W_l] with an index in the metadata.
json write_bundle(const PatternBundle& bundle, const fs::path& dir) {
    std::map<int, std::vector<const CorrelationPattern*>> by_layer;
    for (const auto& p : bundle.patterns) by_layer[p.layer_id].push_back(&p);
    json files = json::array();
    for (const auto& [layer, list] : by_layer) {
        const Tensor& first = list.front()->maps;
        std::size_t total = 0;
        for (const auto* p : list) total += p->count();
        Tensor stacked({total, first.dim(1), first.dim(2)});
        json index = json::array();
        std::size_t at = 0;
        for (const auto* p : list) {
            std::copy(p->maps.values().begin(), p->maps.values().end(), stacked.data() + at);
            at += p->maps.size();
            index.push_back(pattern_index(*p));
        }
        const std::string name = "patterns_layer" + std::to_string(layer) + ".mcgt";
        write_container(stacked, dir / name,
                        {{"kind", "correlation-patterns"},
                         {"layer", std::to_string(layer)},
                         {"tau", std::to_string(list.front()->tau)},
                         {"temperature_mode", to_string(list.front()->mode)},
                         {"index", index.dump()}});
        files.push_back(name);
    }
    return files;
}

struct ResultEntry {
    std::string name;
    fs::path video;
};

std::vector<ResultEntry> find_results(const fs::path& dir) {
    std::vector<ResultEntry> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory() && fs::exists(e.path() / "video.mcgt")) {
            out.push_back({e.path().filename().string(), e.path() / "video.mcgt"});
        } else if (e.is_regular_file() && e.path().extension() == ".mcgt") {
            out.push_back({e.path().stem().string(), e.path()});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

/// `<gt>` or `<gt>_s<seed>`.
std::string gt_key(const std::string& name, const std::map<std::string, fs::path>& gt) {
    if (gt.contains(name)) return name;
    static const std::regex seeded("(.+)_s[0-9]+");
    std::smatch m;
    if (std::regex_match(name, m, seeded) && gt.contains(m[1].str())) return m[1].str();
    return {};
}

MetricReport score(const std::string& name, const PixelVideo& video, const TrajectorySpec& gt,
                   const FeatureProvider* features) {
    MetricReport r = evaluate_video(video, gt);
    r.name = name;
    if (features != nullptr) r.frame_similarity = frame_similarity(video, *features, gt);
    return r;
}

}  // namespace

void mark_failed(const std::string& message) {
    if (g_active_run.empty()) return;
    std::ofstream(g_active_run / kMarker, std::ios::app) << "failed: " << message << "\n";
}

void cmd_synth(const std::string& what, RunConfig c) {
    if (what != "corpus" && what != "trajectories" && what != "box") {
        throw ValidationError("synth expects corpus, trajectories or box");
    }
    if (what == "box" && c.trajectory.empty()) throw ValidationError("synth box needs --trajectory");
    RunDir run(resolve_output(c.output, "synth"), "synth " + what, c);
    json outputs = json::array();
    if (what == "corpus") {
        CorpusConfig corpus = c.synth;
        if (c.dims.frames != 0) corpus.dims.frames = c.dims.frames;
        save_corpus(generate_corpus(corpus), run / "corpus.mcgt");
        outputs.push_back("corpus.mcgt");
    } else if (what == "trajectories") {
        const std::size_t frames = c.frames_for(GuidanceMode::kTrajectory);
        fs::create_directories(run / "gt");
        const auto names = benchmark_trajectory_names();
        const auto trajs = benchmark_trajectories(frames);
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            save_json(to_json(trajs[i]), run / ("gt/" + names[i] + ".json"));
            outputs.push_back("gt/" + names[i] + ".json");
        }
    } else {
        // A box video is usually a reference, so it takes the reference-mode length by default.
        const std::size_t frames = c.frames_for(c.mode.value_or(GuidanceMode::kReference));
        const TrajectorySpec t = resolve_trajectory(c.trajectory, frames);
        write_video(synthesize_box_reference(t, {t.boxes.size(), c.dims.height, c.dims.width}), run / "video.mcgt");
        save_json(to_json(t), run / "trajectory.json");
        outputs = {"video.mcgt", "trajectory.json"};
    }
    run.finish({{"outputs", outputs}, {"seeds", seeds_json(c)}});
}

void cmd_train(RunConfig c) {
    require_file(c.corpus, "training corpus (--corpus)");
    const int steps = c.schedule_steps > 0 ? c.schedule_steps : 50;
    RunDir run(resolve_output(c.output, "train"), "train", c);
    const auto corpus = load_corpus(c.corpus);
    Backbone net(c.backbone);
    const PixelCodec codec;
    std::vector<TrainingExample> examples;
    for (const auto& item : corpus) {
        if (item.label >= c.backbone.num_classes) throw ValidationError("corpus label exceeds backbone.num_classes");
        examples.push_back({codec.encode(item.video), item.label});
        net.check_input(examples.back().z0, examples.back().y);
    }
    const auto schedule = NoiseSchedule::build(steps, c.schedule_kind);
    std::ofstream log(run / "loss.tsv");
    log << "step\tloss\n";
    const TrainResult result = train_toy_backbone(net, examples, schedule, c.train, [&](int step, double loss) {
        std::cerr << "step " << step << " loss " << loss << "\n";
    });
    for (std::size_t s = 0; s < result.loss_history.size(); ++s) log << s + 1 << '\t' << result.loss_history[s] << '\n';
    save_checkpoint(net, run / "checkpoint");
    run.finish({{"checkpoint", "checkpoint"},
                {"checkpoint_hash",
                 {{"weights", content_hash(run / "checkpoint/weights.mcgt")},
                  {"manifest", content_hash(run / "checkpoint/backbone.json")}}},
                {"parameter_hash", parameter_hash(net)},
                {"heldout_initial", result.heldout_initial},
                {"heldout_final", result.heldout_final},
                {"schedule_steps", steps},
                {"seeds", seeds_json(c)}});
}

void cmd_generate(RunConfig c) {
    const GuidanceMode mode = c.resolve_mode();
    require_file(c.checkpoint, "checkpoint (--checkpoint)");
    if (mode == GuidanceMode::kReference) {
        require_file(c.reference, "reference video (--reference)");
        if (c.guidance.points.empty()) throw ValidationError("reference mode needs at least one key point (--point)");
    }
    const int steps = c.steps_for(mode);
    RunDir run(resolve_output(c.output, "generate"), "generate", c);
    const auto [net, hash] = load_backbone(c.checkpoint);
    const auto schedule = NoiseSchedule::build(steps, c.schedule_kind);

    GenerationRequest request;
    request.y = c.label;
    json outputs = {"video.mcgt", "latent.mcgt", "z_T.mcgt", "trace.tsv"};
    if (mode == GuidanceMode::kTrajectory) {
        const std::size_t frames = c.frames_for(mode);
        const TrajectorySpec t = resolve_trajectory(c.trajectory, frames);
        request.trajectory = t;
        request.dims = {t.boxes.size(), c.dims.height, c.dims.width};
        save_json(to_json(t), run / "trajectory.json");
        outputs.push_back("trajectory.json");
    } else {
        request.reference = load_video(c.reference);
        if (c.dims.frames != 0 && c.dims.frames != request.reference->frames()) {
            throw ValidationError("data.frames does not match the reference video");
        }
    }

    TraceWriter trace(run / "trace.tsv");
    const GenerationResult result = generate(net, schedule, request, c.guidance, trace.sink());
    write_video(result.video, run / "video.mcgt");
    write_container(result.z0, run / "latent.mcgt", {{"kind", "latent"}});
    write_container(result.z_T, run / "z_T.mcgt", {{"kind", "latent"}});
    run.finish({{"mode", to_string(mode)},
                {"schedule_steps", steps},
                {"guided_steps", c.guidance.resolved_steps(steps)},
                {"patterns", result.reference.size()},
                {"final_loss", final_loss(result.trace)},
                {"outputs", outputs},
                {"checkpoint_hash", hash},
                {"seeds", seeds_json(c)}});
}

void cmd_invert(RunConfig c) {
    require_file(c.checkpoint, "checkpoint (--checkpoint)");
    require_file(c.video, "input video (--video)");
    const int steps = c.steps_for(c.mode.value_or(GuidanceMode::kTrajectory));
    RunDir run(resolve_output(c.output, "invert"), "invert", c);
    const auto [net, hash] = load_backbone(c.checkpoint);
    const auto schedule = NoiseSchedule::build(steps, c.schedule_kind);
    const PixelCodec codec;
    const Tensor z0 = codec.encode(load_video(c.video));
    const Condition y = c.guidance.conditional_inversion ? c.label : kNullCondition;
    net.check_input(z0, y);
    const Tensor z_T = ddim_invert(z0, net, y, steps, schedule);
    const Tensor back = ddim_sample(
        z_T, steps, [&](const Tensor& z, int t) { return net.predict_noise(z, step_at(schedule, t), y); }, schedule);
    write_container(z_T, run / "z_T.mcgt", {{"kind", "latent"}});
    write_container(back, run / "reconstruction.mcgt", {{"kind", "latent"}});
    const double mae = mean_abs_diff(back, z0);
    std::cout << "round-trip MAE " << mae << "\n";
    run.finish({{"schedule_steps", steps},
                {"roundtrip_mae", mae},
                {"outputs", {"z_T.mcgt", "reconstruction.mcgt"}},
                {"checkpoint_hash", hash},
                {"seeds", seeds_json(c)}});
}

void cmd_extract_pattern(RunConfig c) {
    require_file(c.checkpoint, "checkpoint (--checkpoint)");
    require_file(c.video, "input video (--video)");
    if (c.guidance.points.empty()) throw ValidationError("extract-pattern needs at least one key point (--point)");
    const int steps = c.steps_for(c.mode.value_or(GuidanceMode::kReference));
    c.guidance.validate(steps);
    RunDir run(resolve_output(c.output, "extract-pattern"), "extract-pattern", c);
    const auto [net, hash] = load_backbone(c.checkpoint);
    const auto schedule = NoiseSchedule::build(steps, c.schedule_kind);
    ReferencePatternConfig rc;
    rc.t_prime = c.guidance.t_prime;
    rc.noise_seed = c.guidance.pattern_seed;
    rc.params = c.guidance.pattern_params();
    const ReferencePattern pattern = reference_pattern(load_video(c.video), c.guidance.points, net, schedule, rc);
    json files = write_bundle(pattern.bundle, run.path());
    save_json(tracks_json(pattern.tracks), run / "tracks.json");
    files.push_back("tracks.json");
    run.finish({{"patterns", pattern.bundle.size()},
                {"maps", pattern.bundle.map_count()},
                {"floored_sites", pattern.floored_sites},
                {"outputs", files},
                {"checkpoint_hash", hash},
                {"seeds", seeds_json(c)}});
}

void cmd_evaluate(const fs::path& results, const fs::path& gt_dir, RunConfig c, unsigned jobs) {
    if (results.empty() || !fs::is_directory(results)) throw ValidationError("results directory not found: " + results.string());
    if (gt_dir.empty() || !fs::is_directory(gt_dir)) throw ValidationError("ground-truth directory not found: " + gt_dir.string());
    if (!c.checkpoint.empty()) require_file(c.checkpoint, "feature checkpoint (--checkpoint)");
    RunDir run(resolve_output(c.output, "evaluate"), "evaluate", c);

    std::map<std::string, fs::path> gt;
    for (const auto& e : fs::directory_iterator(gt_dir))
        if (e.is_regular_file() && e.path().extension() == ".json") gt[e.path().stem().string()] = e.path();

    std::vector<std::pair<ResultEntry, std::string>> matched;
    json unmatched_results = json::array(), unmatched_gt = json::array();
    std::map<std::string, bool> used;
    for (const auto& r : find_results(results)) {
        const std::string key = gt_key(r.name, gt);
        if (key.empty()) {
            std::cerr << "unmatched result: " << r.video.string() << "\n";
            unmatched_results.push_back(r.video.string());
            continue;
        }
        used[key] = true;
        matched.emplace_back(r, key);
    }
    for (const auto& [key, path] : gt) {
        if (!used.contains(key)) {
            std::cerr << "unmatched ground truth: " << path.string() << "\n";
            unmatched_gt.push_back(path.string());
        }
    }

    std::optional<LoadedBackbone> features_net;
    std::optional<FeatureProvider> features;
    json hash;
    if (!c.checkpoint.empty()) {
        features_net.emplace(load_backbone(c.checkpoint));
        hash = features_net->hash;
        features = backbone_features(features_net->net, NoiseSchedule::build(c.steps_for(GuidanceMode::kTrajectory),
                                                                             c.schedule_kind));
        jobs = 1;
    }

    std::vector<MetricReport> rows(matched.size());
    auto work = [&](std::size_t i) {
        const auto& [entry, key] = matched[i];
        rows[i] = score(entry.name, load_video(entry.video.string()), trajectory_from_json(load_json(gt.at(key))),
                        features ? &*features : nullptr);
    };
    const std::size_t width = std::max<std::size_t>(1, jobs);
    for (std::size_t begin = 0; begin < matched.size(); begin += width) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = begin; i < std::min(matched.size(), begin + width); ++i) {
            batch.push_back(std::async(width > 1 ? std::launch::async : std::launch::deferred, work, i));
        }
        for (auto& f : batch) f.get();
    }

    const AggregateReport report = aggregate(rows);
    json out = report.to_json();
    out["unmatched_results"] = unmatched_results;
    out["unmatched_ground_truth"] = unmatched_gt;
    save_json(out, run / "report.json");
    std::cout << report.table();
    json record = {{"results", fs::absolute(results).string()},
                   {"ground_truth", fs::absolute(gt_dir).string()},
                   {"rows", rows.size()},
                   {"outputs", {"report.json"}},
                   {"seeds", seeds_json(c)}};
    if (!hash.is_null()) record["checkpoint_hash"] = hash;
    run.finish(record);
}

void cmd_benchmark(RunConfig c, std::size_t seeds) {
    if (seeds == 0) throw ValidationError("benchmark needs at least one seed");
    if (c.mode && *c.mode != GuidanceMode::kTrajectory) throw ValidationError("the benchmark runs in trajectory mode");
    c.mode = GuidanceMode::kTrajectory;
    c.guidance.mode = GuidanceMode::kTrajectory;
    const int steps = c.steps_for(GuidanceMode::kTrajectory);
    c.guidance.validate(steps);
    require_file(c.checkpoint, "checkpoint (--checkpoint)");
    RunDir run(resolve_output(c.output, "benchmark"), "benchmark", c);
    const auto [net, hash] = load_backbone(c.checkpoint);
    const auto schedule = NoiseSchedule::build(steps, c.schedule_kind);
    const std::size_t frames = c.frames_for(GuidanceMode::kTrajectory);
    const auto names = benchmark_trajectory_names();
    const auto trajs = benchmark_trajectories(frames);
    const PixelCodec codec;
    const std::uint64_t base_seed = c.guidance.seed;

    fs::create_directories(run / "gt");
    std::vector<MetricReport> guided_rows, plain_rows;
    std::size_t miou_wins = 0, cd_wins = 0;
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
        save_json(to_json(trajs[i]), run / ("gt/" + names[i] + ".json"));
        for (std::size_t s = 0; s < seeds; ++s) {
            const std::string name = names[i] + "_s" + std::to_string(s);
            GuidanceConfig g = c.guidance;
            g.seed = base_seed + s;
            GenerationRequest request;
            request.trajectory = trajs[i];
            request.dims = {frames, c.dims.height, c.dims.width};
            request.y = c.label;
            const fs::path gdir = run / ("guided/" + name), pdir = run / ("plain/" + name);
            fs::create_directories(gdir);
            fs::create_directories(pdir);
            TraceWriter trace(gdir / "trace.tsv");
            const GenerationResult guided = generate(net, schedule, request, g, trace.sink());
            GuidanceConfig off = g;
            off.guided_steps = 0;
            GuidanceTrace unused;
            const PixelVideo plain =
                codec.decode(guided_sample(net, schedule, guided.z_T, c.label, guided.reference, off, unused));
            write_video(guided.video, gdir / "video.mcgt");
            write_video(plain, pdir / "video.mcgt");
            guided_rows.push_back(score(name, guided.video, trajs[i], nullptr));
            plain_rows.push_back(score(name, plain, trajs[i], nullptr));
            loss_sum += final_loss(guided.trace);
            miou_wins += guided_rows.back().miou > plain_rows.back().miou;
            cd_wins += guided_rows.back().cd < plain_rows.back().cd;
            std::cerr << name << ": guided mIoU " << guided_rows.back().miou << " CD " << guided_rows.back().cd
                      << " | plain mIoU " << plain_rows.back().miou << " CD " << plain_rows.back().cd << "\n";
        }
    }
    const AggregateReport guided = aggregate(guided_rows), plain = aggregate(plain_rows);
    save_json(guided.to_json(), run / "report_guided.json");
    save_json(plain.to_json(), run / "report_plain.json");
    std::cout << "guided\n" << guided.table() << "plain\n" << plain.table();
    const std::size_t runs = guided_rows.size();
    std::cout << "mIoU wins " << miou_wins << "/" << runs << ", CD wins " << cd_wins << "/" << runs << "\n";
    run.finish({{"runs", runs},
                {"guided_mean_miou", guided.mean_miou},
                {"plain_mean_miou", plain.mean_miou},
                {"guided_mean_cd", guided.mean_cd},
                {"plain_mean_cd", plain.mean_cd},
                {"miou_wins", miou_wins},
                {"cd_wins", cd_wins},
                {"mean_final_loss", loss_sum / static_cast<double>(runs)},
                {"schedule_steps", steps},
                {"outputs", {"gt", "guided", "plain", "report_guided.json", "report_plain.json"}},
                {"checkpoint_hash", hash},
                {"seeds", seeds_json(c)}});
}

}  // namespace mcg::cli
