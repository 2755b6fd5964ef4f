#include "flownav/error.hpp"
#include "flownav/evaluate.hpp"
#include "flownav/flow_field.hpp"
#include "flownav/protocol.hpp"
#include "flownav/synth.hpp"
#include "flownav/zermelo.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace flownav;
using nlohmann::json;

namespace {

struct DataOptions {
    std::string data;
    std::size_t cache = 512;
    std::size_t k = 8;
};

struct EpisodeOptions {
    int max_steps = 100;
    int substeps = 40;
    double dt = dynamics::kDefaultDt;
    std::size_t snapshot_lo = 0;
    long snapshot_hi = -1;
};

void add_data_options(CLI::App* app, DataOptions& o) {
    app->add_option("--data", o.data, "Dataset directory (default: $FLOWNAV_DATA)");
    app->add_option("--cache", o.cache, "Block cache capacity")->check(CLI::PositiveNumber);
    app->add_option("--k", o.k, "Nearest blocks per query")->check(CLI::PositiveNumber);
}

void add_episode_options(CLI::App* app, EpisodeOptions& o) {
    app->add_option("--max-steps", o.max_steps, "Step limit per episode")->check(CLI::PositiveNumber);
    app->add_option("--substeps", o.substeps, "RK4 substeps per step")->check(CLI::PositiveNumber);
    app->add_option("--dt", o.dt, "Control step")->check(CLI::PositiveNumber);
    app->add_option("--snapshot-lo", o.snapshot_lo, "First snapshot for episode starts");
    app->add_option("--snapshot-hi", o.snapshot_hi, "Last snapshot for episode starts (inclusive)");
}

std::filesystem::path dataset_dir(const DataOptions& o) {
    if (!o.data.empty()) return o.data;
    if (const char* env = std::getenv("FLOWNAV_DATA"); env && *env) return env;
    throw Error("missing_dataset", "no dataset: pass --data or set FLOWNAV_DATA");
}

std::shared_ptr<interp::FlowField> open_flow(const DataOptions& o) {
    auto store = std::make_shared<store::BlockStore>(dataset_dir(o), o.cache);
    interp::FlowFieldConfig cfg;
    cfg.k = o.k;
    return std::make_shared<interp::FlowField>(store, cfg);
}

env::EpisodeConfig episode_config(const EpisodeOptions& o, const store::MeshMeta& mesh) {
    env::EpisodeConfig c;
    c.max_steps = o.max_steps;
    c.integrator.substeps = o.substeps;
    c.integrator.dt = o.dt;
    c.integrator.block_extent = mesh.min_block_extent();
    c.snapshot_lo = o.snapshot_lo;
    if (o.snapshot_hi >= 0) c.snapshot_hi = std::size_t(o.snapshot_hi);
    c.validate();
    return c;
}

Vec3 to_vec(const std::vector<double>& v) { return {v.at(0), v.at(1), v.at(2)}; }

void emit(const json& j) { std::cout << j.dump() << '\n'; }

json episode_json(const env::EpisodeResult& r) {
    return {{"outcome", env::to_string(r.outcome)},
            {"steps", r.steps},
            {"total_reward", r.total_reward},
            {"seed", r.seed},
            {"snapshot", r.snapshot},
            {"start", env::to_json(r.start)},
            {"target", r.target.to_array()}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Flow-aware UAV navigation engine"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Cut raw full-grid snapshots into a block dataset");
    std::string raw_dir, mesh_path, out_dir;
    ingest->add_option("--raw", raw_dir, "Directory of snapshot_NNNNN.raw files")->required();
    ingest->add_option("--mesh", mesh_path, "mesh.json describing the raw grid (default: <raw>/mesh.json)");
    ingest->add_option("--out", out_dir, "Output dataset directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic wake dataset");
    synth::SyntheticFlowConfig params;
    std::string params_path, synth_out;
    synth->add_option("--out", synth_out, "Output dataset directory")->required();
    synth->add_option("--params", params_path, "JSON file with generator parameters");
    synth->add_option("--nx", params.grid_dims[0]);
    synth->add_option("--ny", params.grid_dims[1]);
    synth->add_option("--nz", params.grid_dims[2]);
    synth->add_option("--snapshots", params.snapshots);
    synth->add_option("--dt", params.dt);
    synth->add_option("--perturbation", params.perturbation);
    synth->add_option("--max-speed", params.max_speed);
    synth->add_option("--seed", params.seed);

    // query
    auto* query = app.add_subcommand("query", "Interpolated flow velocity at one point");
    DataOptions qdata;
    double qx = 0, qy = 0, qz = 0, qt = 0;
    add_data_options(query, qdata);
    query->add_option("--x", qx)->required();
    query->add_option("--y", qy)->required();
    query->add_option("--z", qz)->required();
    query->add_option("--t", qt)->required();

    // episode
    auto* episode = app.add_subcommand("episode", "Run one episode with a built-in policy");
    DataOptions edata;
    EpisodeOptions eopts;
    std::string policy = "greedy", traj_path;
    std::uint64_t eseed = 0;
    long esnap = -1;
    add_data_options(episode, edata);
    add_episode_options(episode, eopts);
    episode->add_option("--policy", policy, "greedy, random or hover");
    episode->add_option("--seed", eseed);
    episode->add_option("--snapshot", esnap, "Start snapshot (default: sampled)");
    episode->add_option("--trajectory", traj_path, "Write per-step records as JSON lines");

    // serve
    auto* serve = app.add_subcommand("serve", "Serve the NDJSON episode protocol");
    DataOptions sdata;
    EpisodeOptions sopts;
    bool use_stdio = false;
    std::string host = "127.0.0.1";
    std::uint16_t port = 7878;
    std::size_t max_conn = 0;
    int patch = 5;
    add_data_options(serve, sdata);
    add_episode_options(serve, sopts);
    serve->add_flag("--stdio", use_stdio, "Read requests from stdin, answer on stdout");
    serve->add_option("--host", host);
    serve->add_option("--port", port, "TCP port; 0 picks a free one");
    serve->add_option("--max-connections", max_conn, "Exit after this many sessions (0 = never)");
    serve->add_option("--patch-size", patch, "Flow patch samples per side")->check(CLI::PositiveNumber);

    // zermelo
    auto* zer = app.add_subcommand("zermelo", "Optimize an open-loop trajectory on a frozen snapshot");
    DataOptions zdata;
    EpisodeOptions zopts;
    std::vector<double> zstart, ztarget;
    std::uint64_t zseed = 0;
    long zsnap = -1;
    int ziters = 400;
    bool zreplay = false;
    add_data_options(zer, zdata);
    add_episode_options(zer, zopts);
    zer->add_option("--start", zstart, "Start x y z (default: sampled from --seed)")->expected(3);
    zer->add_option("--target", ztarget, "Target x y z (default: sampled from --seed)")->expected(3);
    zer->add_option("--snapshot", zsnap, "Planning snapshot (default: sampled)");
    zer->add_option("--seed", zseed);
    zer->add_option("--max-iterations", ziters)->check(CLI::PositiveNumber);
    zer->add_flag("--replay", zreplay, "Fly the plan in the time-varying flow and report the outcome");

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a built-in policy over many episodes");
    DataOptions vdata;
    EpisodeOptions vopts;
    std::size_t episodes = 100;
    std::string vpolicy = "greedy";
    std::uint64_t vseed = 0;
    add_data_options(eval, vdata);
    add_episode_options(eval, vopts);
    eval->add_option("--episodes", episodes)->check(CLI::PositiveNumber);
    eval->add_option("--policy", vpolicy, "greedy, random or hover");
    eval->add_option("--seed", vseed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit({{"error", {{"code", "invalid_arguments"}, {"message", e.what()}}}});
        std::cerr << "flownav: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*ingest) {
            const std::filesystem::path mp = mesh_path.empty() ? std::filesystem::path(raw_dir) / "mesh.json" : std::filesystem::path(mesh_path);
            const store::MeshMeta mesh = store::read_mesh_json(mp);
            store::ingest(store::raw_directory_source(mesh, raw_dir), mesh, out_dir);
            const store::BlockLayout layout(mesh);
            emit({{"out", out_dir}, {"snapshots", mesh.snapshot_count()}, {"blocks_per_snapshot", layout.block_count()}});
        } else if (*synth) {
            if (!params_path.empty()) {
                std::ifstream in(params_path);
                if (!in) throw Error("io_error", "cannot read " + params_path);
                synth::SyntheticFlowConfig file = json::parse(in).get<synth::SyntheticFlowConfig>();
                params = file;
            }
            std::cerr << "synth: writing " << params.snapshots << " snapshots to " << synth_out << "\n";
            const store::MeshMeta mesh = synth::synthesize(params, synth_out);
            json j = mesh;
            emit({{"out", synth_out}, {"mesh", j}, {"params", json(params)}});
        } else if (*query) {
            auto flow = open_flow(qdata);
            const interp::VelocityResult r = flow->get_velocity({qx, qy, qz}, qt);
            emit({{"position", {qx, qy, qz}},
                  {"t", qt},
                  {"velocity", r.value.vec().to_array()},
                  {"ok", r.ok},
                  {"extrapolated", r.extrapolated},
                  {"full_stencil", r.full_stencil}});
        } else if (*episode) {
            auto flow = open_flow(edata);
            const auto& mesh = flow->store().mesh();
            env::Environment environment(flow, mesh.scene(), episode_config(eopts, mesh));
            const auto factory = env::policy_by_name(policy);
            std::optional<std::size_t> snap;
            if (esnap >= 0) snap = std::size_t(esnap);
            const env::EpisodeResult r = env::run_episode(environment, factory(eseed), eseed, snap);
            if (!traj_path.empty()) {
                std::ofstream out(traj_path);
                if (!out) throw Error("io_error", "cannot write " + traj_path);
                env::write_trajectory_jsonl(out, r);
            }
            emit(episode_json(r));
        } else if (*serve) {
            auto flow = open_flow(sdata);
            const auto& mesh = flow->store().mesh();
            protocol::SessionConfig sc;
            sc.episode = episode_config(sopts, mesh);
            sc.patch_size = patch;
            const Scene scene = mesh.scene();
            if (use_stdio) {
                protocol::Session session(flow, scene, sc);
                protocol::serve_stream(session, std::cin, std::cout);
            } else {
                protocol::TcpServer server(host, port, [&] { return std::make_unique<protocol::Session>(flow, scene, sc); });
                std::cerr << json({{"listening", {{"host", host}, {"port", server.port()}}}}).dump() << std::endl;
                server.run(max_conn);
            }
        } else if (*zer) {
            auto flow = open_flow(zdata);
            const auto& mesh = flow->store().mesh();
            env::Environment environment(flow, mesh.scene(), episode_config(zopts, mesh));
            std::optional<std::size_t> snap;
            if (zsnap >= 0) snap = std::size_t(zsnap);
            environment.reset(zseed, snap);
            const std::size_t snapshot = environment.snapshot();
            const Vec3 start = zstart.empty() ? environment.state().position : to_vec(zstart);
            const Vec3 target = ztarget.empty() ? environment.target() : to_vec(ztarget);
            zermelo::ZermeloConfig zc;
            zc.seed = zseed;
            zc.max_iterations = ziters;
            const zermelo::GridFlow grid(mesh, flow->store().assemble(snapshot));
            const zermelo::FrozenFlow frozen = [&grid](const Vec3& p) { return grid(p); };
            std::cerr << "zermelo: optimizing on snapshot " << snapshot << "\n";
            const zermelo::OptimizeResult r = zermelo::optimize(start, target, frozen, mesh.scene(), zc);
            json out = {{"start", start.to_array()},
                        {"target", target.to_array()},
                        {"snapshot", snapshot},
                        {"trajectory", zermelo::to_json(r.trajectory)},
                        {"cost", zermelo::to_json(r.cost)},
                        {"straight_cost", zermelo::to_json(r.straight_cost)},
                        {"iterations", r.iterations},
                        {"converged", r.converged}};
            if (zreplay) {
                const env::EpisodeResult er = zermelo::replay(r.trajectory, frozen, environment, target, snapshot);
                out["replay"] = episode_json(er);
            }
            emit(out);
        } else if (*eval) {
            auto flow = open_flow(vdata);
            const auto& mesh = flow->store().mesh();
            env::Environment environment(flow, mesh.scene(), episode_config(vopts, mesh));
            const env::EvalSummary s = env::evaluate(environment, env::policy_by_name(vpolicy), episodes, vseed);
            json j = env::summary_json(s);
            j["policy"] = vpolicy;
            j["seed"] = vseed;
            emit(j);
        }
    } catch (const Error& e) {
        emit({{"error", {{"code", e.code()}, {"message", e.what()}}}});
        std::cerr << "flownav: " << e.code() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        emit({{"error", {{"code", "internal_error"}, {"message", e.what()}}}});
        std::cerr << "flownav: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
