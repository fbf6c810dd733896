#include "fourtran/bench.hpp"
#include "fourtran/parallel.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fourtran;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitTaskFailure = 2;

PipelineConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path);
    try {
        return config_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed config " + path + ": " + e.what());
    }
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << '\n';
}

json summary_json(const DistributionSummary& s) {
    json top = json::array();
    for (const auto& e : s.top) top.push_back({{"cell", e.cell}, {"rotation_index", e.rotation_index}, {"score", e.score}});
    return {{"top", top}, {"entropy", s.entropy}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fourtran: bi-equivariant pick-and-place inference harness"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (overrides FOURTRAN_THREADS)");

    auto* gen = app.add_subcommand("gen-scene", "Generate a synthetic insertion scene");
    int dim = 2;
    std::string shape = "l_block_2d";
    std::uint64_t seed = 0;
    SceneOptions scene_opt;
    std::vector<int> grid_shape;
    std::string out_stem;
    gen->add_option("--dim", dim, "2 or 3")->check(CLI::IsMember({2, 3}));
    gen->add_option("--shape", shape, "l_block_2d, kit_shape_2d:<k>, peg_cube_3d, l_bracket_3d");
    gen->add_option("--seed", seed);
    gen->add_flag("--grid-exact", scene_opt.grid_exact, "Integer cells and grid-exact rotations");
    gen->add_flag("--null-task", scene_opt.null_task, "Slot in the object's orientation");
    gen->add_option("--grid", grid_shape, "Grid extents in cells (e.g. 72 96 56)");
    gen->add_option("--cell-size", scene_opt.cell_size, "Cell size in meters");
    gen->add_option("--out", out_stem, "Output stem; writes <stem>.sfld and <stem>.json")->required();

    auto* run = app.add_subcommand("run", "Run inference on a scene and score it");
    std::string scene_path, config_path, out_dir;
    run->add_option("--scene", scene_path, "Scene sidecar (.json) or stem")->required();
    run->add_option("--config", config_path, "Pipeline config JSON");
    run->add_option("--out", out_dir, "Directory for result.json");

    auto* verify = app.add_subcommand("verify", "Run an invariant suite on a scene");
    std::string mode = "equivariance", report_path;
    VerifyOptions vopt;
    verify->add_option("--scene", scene_path)->required();
    verify->add_option("--config", config_path);
    verify->add_option("--mode", mode)->check(CLI::IsMember({"equivariance", "oracle", "steerability"}));
    verify->add_option("--max-pairs", vopt.max_pairs);
    verify->add_option("--tolerance", vopt.tolerance);
    verify->add_option("--out", report_path, "Report JSON path (stdout if omitted)");

    auto* bench_cmd = app.add_subcommand("bench", "Time pipeline stages across thread counts");
    std::vector<int> thread_counts{1, 2, 8};
    int bench_dim = 3;
    bench_cmd->add_option("--config", config_path);
    bench_cmd->add_option("--dim", bench_dim)->check(CLI::IsMember({2, 3}));
    bench_cmd->add_option("--thread-counts", thread_counts);
    bench_cmd->add_option("--out", report_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitUsage;
    }
    if (threads > 0) set_thread_count(threads);

    try {
        if (gen->parsed()) {
            if (!grid_shape.empty()) {
                if (static_cast<int>(grid_shape.size()) != dim) throw std::runtime_error("--grid needs one extent per axis");
                for (int a = 0; a < dim; ++a) scene_opt.shape[a] = grid_shape[static_cast<std::size_t>(a)];
            }
            const Scene s = gen_scene(dim, shape, seed, scene_opt);
            std::cout << save_scene(s, out_stem).string() << '\n';
            return kExitPass;
        }
        if (run->parsed()) {
            const Scene s = load_scene(scene_path);
            const PipelineConfig config = load_config(config_path);
            const InferenceResult r = infer(s, config);
            const EvalResult e = evaluate(s, r);
            const json j = {{"pick", to_json(r.pick)},
                            {"place", to_json(r.place)},
                            {"pick_distribution", summary_json(r.pick_summary)},
                            {"place_distribution", summary_json(r.place_summary)},
                            {"eval", to_json(e)},
                            {"timings_s", r.timings}};
            if (out_dir.empty()) {
                std::cout << j.dump(2) << '\n';
            } else {
                fs::create_directories(out_dir);
                emit(j, (fs::path(out_dir) / "result.json").string());
            }
            return e.success_low ? kExitPass : kExitTaskFailure;
        }
        if (verify->parsed()) {
            const Scene s = load_scene(scene_path);
            const PipelineConfig config = load_config(config_path);
            json report;
            if (mode == "equivariance")
                report = verify_equivariance(s, config, vopt);
            else if (mode == "oracle")
                report = verify_oracle(s, config, vopt);
            else
                report = verify_steerability(s, config, vopt);
            emit(report, report_path);
            return report.at("pass").get<bool>() ? kExitPass : kExitTaskFailure;
        }
        if (bench_cmd->parsed()) {
            const PipelineConfig config = load_config(config_path);
            const json report = bench(config, bench_dim, thread_counts);
            emit(report, report_path);
            return report.at("identical_across_threads").get<bool>() ? kExitPass : kExitTaskFailure;
        }
    } catch (const std::exception& e) {
        std::cerr << "fourtran: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
