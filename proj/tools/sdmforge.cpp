// sdmforge command line: generate SDMs with any backend, train the surrogate
// models, recover shape parameters from target volumes, benchmark the
// engines, and extract isosurfaces/contours/slices.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdmforge/cochlea.hpp"
#include "sdmforge/fit.hpp"
#include "sdmforge/grid_io.hpp"
#include "sdmforge/isosurface.hpp"
#include "sdmforge/mesh_io.hpp"
#include "sdmforge/model_io.hpp"
#include "sdmforge/pointwise.hpp"
#include "sdmforge/sdm.hpp"
#include "sdmforge/surrogate.hpp"

namespace {

using namespace sdmforge;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitArtifact = 4;

struct ParamFlags {
    double a = 3.5;
    double alpha = 0.6;
    double b = 0.15;
    double phi = 0.0;

    ShapeParams params() const { return {a, alpha, b, phi}; }

    void attach(CLI::App* cmd) {
        cmd->add_option("--a", a, "basal spiral radius [mm]")->capture_default_str();
        cmd->add_option("--alpha", alpha, "per-turn radial decay")->capture_default_str();
        cmd->add_option("--b", b, "vertical rise [mm/rad]")->capture_default_str();
        cmd->add_option("--phi", phi, "initial phase [rad]")->capture_default_str();
    }
};

double time_once(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double time_median(int repeat, const std::function<void()>& fn) {
    std::vector<double> times;
    times.reserve(repeat);
    for (int i = 0; i < repeat; ++i) times.push_back(time_once(fn));
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

std::string cpu_description() {
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) return line.substr(colon + 2);
        }
    return "unknown";
}

BackendContext load_context(const std::string& model_path, const std::string& pw_path,
                            std::optional<SurrogateModel>& model,
                            std::optional<PointwiseModel>& pw) {
    BackendContext ctx;
    if (!model_path.empty()) {
        model = load_model(model_path);
        ctx.surrogate = &*model;
    }
    if (!pw_path.empty()) {
        pw = load_pointwise_model(pw_path);
        ctx.pointwise = &*pw;
    }
    return ctx;
}

void write_sdm_outputs(const ScalarGrid& g, const std::string& out, const ClampInfo& clamp) {
    write_vtk(g, out + ".vtk");
    write_raw(g, out, clamp);
    std::cout << "wrote " << out << ".vtk, " << out << ".raw, " << out << ".json\n";
}

// ---------------------------------------------------------------------------

int cmd_sdm(const ParamFlags& pf, const std::string& backend_name_str, const std::string& out,
            bool clamp, const std::string& model_path, const std::string& pw_path) {
    const BackendId backend = backend_from_name(backend_name_str);
    std::optional<SurrogateModel> model;
    std::optional<PointwiseModel> pw;
    const BackendContext ctx = load_context(model_path, pw_path, model, pw);
    const ShapeParams p = pf.params();
    validate_params(p);
    const GridSpec g = default_grid_spec();

    ScalarGrid sdm;
    switch (backend) {
        case BackendId::naive:
        case BackendId::bvh:
        case BackendId::edt:
            sdm = reference_sdm(p, g, backend);
            break;
        case BackendId::surrogate:
            if (!ctx.surrogate) throw ArtifactError("--backend surrogate requires --model");
            sdm = surrogate_forward(*ctx.surrogate, p);
            break;
        case BackendId::pointwise:
            if (!ctx.pointwise) throw ArtifactError("--backend pointwise requires --pw-model");
            sdm = pw_fill_grid(*ctx.pointwise, p, g);
            break;
    }
    ClampInfo info;
    if (clamp) {
        sdm = clamp_grid(sdm);
        info.applied = true;
    }
    write_sdm_outputs(sdm, out, info);
    return kExitOk;
}

int cmd_mesh(const ParamFlags& pf, const std::string& out, double target_edge) {
    TessellationSpec spec;
    spec.target_edge = target_edge;
    const TriangleMesh mesh = tessellate(pf.params(), spec);
    if (out.ends_with(".stl"))
        write_stl(mesh, out);
    else
        write_obj(mesh, out);
    std::cout << "wrote " << out << " (" << mesh.vertex_count() << " vertices, "
              << mesh.face_count() << " faces)\n";
    return kExitOk;
}

int cmd_train_grid(long steps, int batch, double lr, double mix, uint64_t seed,
                   const std::string& backend_str, int static_n, const std::string& out) {
    TrainConfig cfg;
    cfg.steps = steps;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.static_ratio = mix;
    cfg.seed = seed;
    cfg.reference_backend = backend_from_name(backend_str);
    cfg.validate();

    SurrogateModel model = init_model(seed);
    if (steps > 0) {
        std::cerr << "building static set (" << static_n << "^4 reference SDMs)...\n";
        const std::vector<StaticSample> static_set =
            build_static_set(static_n, model.grid, cfg.reference_backend);
        model = train(model, cfg, static_set, nullptr, true);
    }
    save_model(model, out);
    std::cout << "wrote " << detail::model_paths(out).first << " (final mse "
              << model.meta.final_loss << ")\n";
    return kExitOk;
}

int cmd_train_pointwise(long steps, int points, double lr, uint64_t seed,
                        const std::string& out) {
    PwTrainConfig cfg;
    cfg.steps = steps;
    cfg.points_per_step = points;
    cfg.lr = lr;
    cfg.seed = seed;
    PointwiseModel model = pw_init(seed);
    if (steps > 0) model = pw_train(model, cfg, nullptr, true);
    save_model(model, out);
    std::cout << "wrote " << detail::model_paths(out).first << " (final loss "
              << model.meta.final_loss << ")\n";
    return kExitOk;
}

int cmd_infer(const ParamFlags& pf, const std::string& model_path, const std::string& out,
              bool clamp) {
    const SurrogateModel model = load_model(model_path);
    ScalarGrid g = surrogate_forward(model, pf.params());
    ClampInfo info;
    if (clamp) {
        g = clamp_grid(g);
        info.applied = true;
    }
    write_sdm_outputs(g, out, info);
    return kExitOk;
}

int cmd_fit(const std::string& target_path, const std::string& backend_str, int restarts,
            int iters, uint64_t seed, const std::string& model_path, const std::string& pw_path,
            const std::string& out) {
    std::optional<SurrogateModel> model;
    std::optional<PointwiseModel> pw;
    const BackendContext ctx = load_context(model_path, pw_path, model, pw);
    const BackendId backend = backend_from_name(backend_str);
    if (backend == BackendId::surrogate && !ctx.surrogate)
        throw ArtifactError("--backend surrogate requires --model");
    if (backend == BackendId::pointwise && !ctx.pointwise)
        throw ArtifactError("--backend pointwise requires --pw-model");

    const FitTarget target = FitTarget::from_sdm(clamp_grid(read_grid_any(target_path)));
    FitConfig cfg;
    cfg.restarts = restarts;
    cfg.max_iterations = iters;
    cfg.seed = seed;
    const FitResult r = fit_shape(target, backend, cfg, ctx);
    atomic_write_file(out, fit_report_json(r).dump(2) + "\n");
    std::cout << "fit: a=" << r.params.a << " alpha=" << r.params.alpha << " b=" << r.params.b
              << " phi=" << r.params.phi << " objective=" << r.objective << " ("
              << r.evaluations << " evaluations, " << r.seconds << " s)\n";
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_bench(const ParamFlags& pf, int repeat, const std::string& model_path,
              const std::string& pw_path, const std::string& out) {
    if (repeat < 1) throw std::invalid_argument("--repeat must be >= 1");
    std::optional<SurrogateModel> model;
    std::optional<PointwiseModel> pw;
    const BackendContext ctx = load_context(model_path, pw_path, model, pw);
    const ShapeParams p = pf.params();
    validate_params(p);
    const GridSpec g = default_grid_spec();

    std::ostringstream csv;
    csv << "# cpu: " << cpu_description() << "\n";
    csv << "# workers: " << worker_count() << "\n";
    csv << "method,task,seconds,dims,triangles\n";
    const std::string dims = std::to_string(g.nx) + "x" + std::to_string(g.ny) + "x" +
                             std::to_string(g.nz);

    TriangleMesh mesh;
    const double t_mesh = time_median(repeat, [&] { mesh = tessellate(p); });
    const std::string tris = std::to_string(mesh.face_count());
    csv << "naive,mesh_build," << t_mesh << "," << dims << "," << tris << "\n";

    Bvh bvh;
    const double t_bvh = time_median(repeat, [&] { bvh = build_bvh(mesh); });
    csv << "bvh,bvh_build," << t_bvh << "," << dims << "," << tris << "\n";

    ScalarGrid sink;
    const double t_naive = time_median(repeat, [&] { sink = sdm_naive(mesh, g); });
    csv << "naive,single_sdm," << t_naive << "," << dims << "," << tris << "\n";
    const double t_bvh_sdm = time_median(repeat, [&] { sink = sdm_bvh(mesh, bvh, g); });
    csv << "bvh,single_sdm," << t_bvh_sdm << "," << dims << "," << tris << "\n";
    const double t_edt = time_median(repeat, [&] { sink = sdm_edt(mesh, g).grid; });
    csv << "edt,single_sdm," << t_edt << "," << dims << "," << tris << "\n";

    double t_surrogate = -1.0;
    if (ctx.surrogate) {
        t_surrogate =
            time_median(repeat, [&] { sink = surrogate_forward(*ctx.surrogate, p); });
        csv << "surrogate,single_sdm," << t_surrogate << "," << dims << ",0\n";
    }
    if (ctx.pointwise) {
        const double t_pw =
            time_median(repeat, [&] { sink = pw_fill_grid(*ctx.pointwise, p, g); });
        csv << "pointwise,single_sdm," << t_pw << "," << dims << ",0\n";
    }

    atomic_write_file(out, csv.str());
    std::cout << csv.str();
    if (t_surrogate > 0.0)
        std::cout << "# speedup naive/surrogate: " << t_naive / t_surrogate << "x\n";
    return kExitOk;
}

int cmd_extract(const std::string& in, double iso, const std::string& out) {
    const ScalarGrid g = read_grid_any(in);
    const IsoMesh iso_mesh = marching_cubes(g, iso);
    if (iso_mesh.empty_warning)
        std::cerr << "warning: iso value " << iso << " produced an empty surface\n";
    if (out.ends_with(".stl"))
        write_stl(iso_mesh.mesh, out);
    else
        write_obj(iso_mesh.mesh, out);
    std::cout << "wrote " << out << " (" << iso_mesh.mesh.face_count() << " faces)\n";
    return kExitOk;
}

int cmd_contours(const std::string& in, const std::string& axis, int index,
                 std::vector<double> levels, const std::string& out) {
    const ScalarGrid g = read_grid_any(in);
    if (axis.size() != 1 || std::string("xyz").find(axis) == std::string::npos)
        throw std::invalid_argument("--axis must be x, y or z");
    const int ax = axis == "x" ? 0 : (axis == "y" ? 1 : 2);
    if (levels.empty()) levels = {0.0, 1.0};
    const auto sets = slice_isocontours(g, ax, index, levels);
    std::ostringstream csv;
    csv << "level,polyline,x,y\n";
    csv.precision(9);
    for (const ContourSet& cs : sets)
        for (std::size_t pl = 0; pl < cs.polylines.size(); ++pl)
            for (const auto& pt : cs.polylines[pl])
                csv << cs.level << "," << pl << "," << pt[0] << "," << pt[1] << "\n";
    atomic_write_file(out, csv.str());
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_slice(const std::string& in, const std::string& axis, int index, const std::string& out,
              double lo, double hi) {
    const ScalarGrid g = read_grid_any(in);
    if (axis.size() != 1 || std::string("xyz").find(axis) == std::string::npos)
        throw std::invalid_argument("--axis must be x, y or z");
    const int ax = axis == "x" ? 0 : (axis == "y" ? 1 : 2);
    write_pgm_slice(g, ax, index, out, lo, hi);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_compare(int cases, uint64_t seed, const std::string& model_path,
                const std::string& backend_str, int restarts, int iters, double noise_sigma,
                const std::string& out) {
    if (cases < 1) throw std::invalid_argument("--cases must be >= 1");
    std::optional<SurrogateModel> model;
    std::optional<PointwiseModel> pw;
    const BackendContext ctx = load_context(model_path, "", model, pw);
    if (!ctx.surrogate) throw ArtifactError("compare requires --model (trained surrogate)");
    const BackendId mesh_backend = backend_from_name(backend_str);

    const GridSpec g = default_grid_spec();
    std::vector<ShapeParams> truths;
    std::vector<FitTarget> targets;
    Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const ShapeParams truth = sample_random_params(rng);
        ScalarGrid sdm = clamp_grid(reference_sdm(truth, g, mesh_backend));
        if (noise_sigma > 0.0)
            for (float& v : sdm.values) v += static_cast<float>(noise_sigma * rng.normal());
        truths.push_back(truth);
        targets.push_back(FitTarget::from_sdm(std::move(sdm)));
    }

    FitConfig cfg;
    cfg.restarts = restarts;
    cfg.max_iterations = iters;
    cfg.seed = seed;
    const CompareReport report = compare_fits(targets, truths, mesh_backend, ctx, cfg);
    atomic_write_file(out, compare_report_csv(report));
    std::cout << compare_report_csv(report);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sdmforge: signed distance maps of a 4-parameter cochlea shape model"};
    app.require_subcommand(1);

    // sdm
    auto* sdm_cmd = app.add_subcommand("sdm", "generate an SDM with a chosen backend");
    ParamFlags sdm_params;
    sdm_params.attach(sdm_cmd);
    std::string sdm_backend = "bvh", sdm_out = "sdm", sdm_model, sdm_pw;
    bool sdm_clamp = false;
    sdm_cmd->add_option("--backend", sdm_backend, "naive|bvh|edt|surrogate|pointwise")
        ->capture_default_str();
    sdm_cmd->add_option("--out", sdm_out, "output base path")->capture_default_str();
    sdm_cmd->add_flag("--clamp", sdm_clamp, "clamp values to (-0.2, 1.3) mm");
    sdm_cmd->add_option("--model", sdm_model, "trained grid-decoder model manifest");
    sdm_cmd->add_option("--pw-model", sdm_pw, "trained pointwise model manifest");

    // mesh
    auto* mesh_cmd = app.add_subcommand("mesh", "tessellate the shape to OBJ or STL");
    ParamFlags mesh_params;
    mesh_params.attach(mesh_cmd);
    std::string mesh_out = "cochlea.obj";
    double mesh_edge = 0.30;
    mesh_cmd->add_option("--out", mesh_out, ".obj or .stl path")->capture_default_str();
    mesh_cmd->add_option("--target-edge", mesh_edge, "target edge length [mm]")
        ->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "train the surrogate models");
    std::string train_arch = "grid", train_backend = "bvh", train_out = "model";
    long train_steps = 2000;
    int train_batch = 8, train_static_n = 5, train_points = 256;
    double train_lr = 1e-3, train_mix = 0.5;
    uint64_t train_seed = 1;
    train_cmd->add_option("--arch", train_arch, "grid|pointwise")->capture_default_str();
    train_cmd->add_option("--steps", train_steps, "training steps")->capture_default_str();
    train_cmd->add_option("--batch", train_batch, "batch size (grid arch)")
        ->capture_default_str();
    train_cmd->add_option("--points", train_points, "points per step (pointwise arch)")
        ->capture_default_str();
    train_cmd->add_option("--lr", train_lr, "learning rate")->capture_default_str();
    train_cmd->add_option("--mix", train_mix, "static fraction of each batch")
        ->capture_default_str();
    train_cmd->add_option("--seed", train_seed, "rng seed")->capture_default_str();
    train_cmd->add_option("--backend", train_backend, "reference backend (naive|bvh|edt)")
        ->capture_default_str();
    train_cmd->add_option("--static-n", train_static_n, "static lattice points per axis")
        ->capture_default_str();
    train_cmd->add_option("--out", train_out, "model output base path")->capture_default_str();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "run the trained grid decoder");
    ParamFlags infer_params;
    infer_params.attach(infer_cmd);
    std::string infer_model, infer_out = "sdm";
    bool infer_clamp = false;
    infer_cmd->add_option("--model", infer_model, "trained model manifest")->required();
    infer_cmd->add_option("--out", infer_out, "output base path")->capture_default_str();
    infer_cmd->add_flag("--clamp", infer_clamp, "clamp values to (-0.2, 1.3) mm");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "recover shape parameters from a target SDM");
    std::string fit_target, fit_backend = "bvh", fit_model, fit_pw, fit_out = "fit.json";
    int fit_restarts = 4, fit_iters = 150;
    uint64_t fit_seed = 0;
    fit_cmd->add_option("--target", fit_target, "target SDM (.vtk or raw base)")->required();
    fit_cmd->add_option("--backend", fit_backend, "naive|bvh|edt|surrogate|pointwise")
        ->capture_default_str();
    fit_cmd->add_option("--restarts", fit_restarts, "restarts")->capture_default_str();
    fit_cmd->add_option("--iters", fit_iters, "max iterations per restart")
        ->capture_default_str();
    fit_cmd->add_option("--seed", fit_seed, "rng seed")->capture_default_str();
    fit_cmd->add_option("--model", fit_model, "trained grid-decoder model manifest");
    fit_cmd->add_option("--pw-model", fit_pw, "trained pointwise model manifest");
    fit_cmd->add_option("--out", fit_out, "fit report JSON path")->capture_default_str();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "time single-SDM generation per backend");
    ParamFlags bench_params;
    bench_params.attach(bench_cmd);
    int bench_repeat = 3;
    std::string bench_model, bench_pw, bench_out = "bench.csv";
    bench_cmd->add_option("--repeat", bench_repeat, "median of k runs")->capture_default_str();
    bench_cmd->add_option("--model", bench_model, "trained grid-decoder model manifest");
    bench_cmd->add_option("--pw-model", bench_pw, "trained pointwise model manifest");
    bench_cmd->add_option("--out", bench_out, "CSV output path")->capture_default_str();

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "marching-cubes isosurface to OBJ/STL");
    std::string ex_in, ex_out = "iso.obj";
    double ex_iso = 0.0;
    extract_cmd->add_option("--in", ex_in, "input grid (.vtk or raw base)")->required();
    extract_cmd->add_option("--iso", ex_iso, "iso value [mm]")->capture_default_str();
    extract_cmd->add_option("--out", ex_out, ".obj or .stl path")->capture_default_str();

    // contours
    auto* cont_cmd = app.add_subcommand("contours", "slice isocontours to CSV");
    std::string ct_in, ct_axis = "z", ct_out = "contours.csv";
    int ct_index = 0;
    std::vector<double> ct_levels;
    cont_cmd->add_option("--in", ct_in, "input grid (.vtk or raw base)")->required();
    cont_cmd->add_option("--axis", ct_axis, "slice axis (x|y|z)")->capture_default_str();
    cont_cmd->add_option("--index", ct_index, "slice index")->capture_default_str();
    cont_cmd->add_option("--levels", ct_levels, "iso levels [mm], default 0 and 1")
        ->expected(-1);
    cont_cmd->add_option("--out", ct_out, "CSV output path")->capture_default_str();

    // slice
    auto* slice_cmd = app.add_subcommand("slice", "export one slice as PGM");
    std::string sl_in, sl_axis = "z", sl_out = "slice.pgm";
    int sl_index = 0;
    double sl_lo = kClampLo, sl_hi = kClampHi;
    slice_cmd->add_option("--in", sl_in, "input grid (.vtk or raw base)")->required();
    slice_cmd->add_option("--axis", sl_axis, "slice axis (x|y|z)")->capture_default_str();
    slice_cmd->add_option("--index", sl_index, "slice index")->capture_default_str();
    slice_cmd->add_option("--lo", sl_lo, "greyscale mapping lower bound")
        ->capture_default_str();
    slice_cmd->add_option("--hi", sl_hi, "greyscale mapping upper bound")
        ->capture_default_str();
    slice_cmd->add_option("--out", sl_out, "PGM output path")->capture_default_str();

    // compare
    auto* cmp_cmd = app.add_subcommand("compare", "mesh-vs-surrogate fit comparison table");
    int cmp_cases = 9, cmp_restarts = 4, cmp_iters = 150;
    uint64_t cmp_seed = 7;
    std::string cmp_model, cmp_backend = "bvh", cmp_out = "compare.csv";
    double cmp_noise = 0.0;
    cmp_cmd->add_option("--cases", cmp_cases, "number of synthetic targets")
        ->capture_default_str();
    cmp_cmd->add_option("--seed", cmp_seed, "rng seed")->capture_default_str();
    cmp_cmd->add_option("--model", cmp_model, "trained grid-decoder model manifest")
        ->required();
    cmp_cmd->add_option("--backend", cmp_backend, "mesh backend (naive|bvh|edt)")
        ->capture_default_str();
    cmp_cmd->add_option("--restarts", cmp_restarts, "restarts per fit")->capture_default_str();
    cmp_cmd->add_option("--iters", cmp_iters, "max iterations per restart")
        ->capture_default_str();
    cmp_cmd->add_option("--noise", cmp_noise, "gaussian target noise sigma [mm]")
        ->capture_default_str();
    cmp_cmd->add_option("--out", cmp_out, "CSV output path")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*sdm_cmd)
            return cmd_sdm(sdm_params, sdm_backend, sdm_out, sdm_clamp, sdm_model, sdm_pw);
        if (*mesh_cmd) return cmd_mesh(mesh_params, mesh_out, mesh_edge);
        if (*train_cmd) {
            if (train_arch == "grid")
                return cmd_train_grid(train_steps, train_batch, train_lr, train_mix, train_seed,
                                      train_backend, train_static_n, train_out);
            if (train_arch == "pointwise")
                return cmd_train_pointwise(train_steps, train_points, train_lr, train_seed,
                                           train_out);
            throw std::invalid_argument("--arch must be grid or pointwise");
        }
        if (*infer_cmd) return cmd_infer(infer_params, infer_model, infer_out, infer_clamp);
        if (*fit_cmd)
            return cmd_fit(fit_target, fit_backend, fit_restarts, fit_iters, fit_seed,
                           fit_model, fit_pw, fit_out);
        if (*bench_cmd)
            return cmd_bench(bench_params, bench_repeat, bench_model, bench_pw, bench_out);
        if (*extract_cmd) return cmd_extract(ex_in, ex_iso, ex_out);
        if (*cont_cmd) return cmd_contours(ct_in, ct_axis, ct_index, ct_levels, ct_out);
        if (*slice_cmd) return cmd_slice(sl_in, sl_axis, sl_index, sl_out, sl_lo, sl_hi);
        if (*cmp_cmd)
            return cmd_compare(cmp_cases, cmp_seed, cmp_model, cmp_backend, cmp_restarts,
                               cmp_iters, cmp_noise, cmp_out);
    } catch (const ArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArtifact;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
