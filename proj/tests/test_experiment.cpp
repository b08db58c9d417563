#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ddpood/errors.hpp"
#include "ddpood/experiment.hpp"

using namespace ddpood;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ddpood_test_" + name);
    fs::remove_all(p);
    return p;
}

json small_document(const fs::path& out) {
    return json{{"seed", 99},
                {"output_dir", out.string()},
                {"data", {{"n_train", 400}, {"n_per_set", 40}, {"adversarial_budget", 20000}}},
                {"classifier", {{"num_features", 64}, {"epochs", 150}}},
                {"detector", {{"timestep", 400}, {"omega", 3.0}, {"repeats", 2}, {"detect_space", "feature"}}}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) files[entry.path().filename().string()] = slurp(entry.path());
    return files;
}

int run_cli(const std::string& args, const fs::path& capture) {
    const std::string cmd = std::string("\"") + DDPOOD_CLI_PATH + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
#ifdef WEXITSTATUS
    return WEXITSTATUS(status);
#else
    return status;
#endif
}

}  // namespace

TEST_SUITE("experiment") {
    TEST_CASE("config parsing") {
        const ExperimentConfig c = parse_config(json{{"seed", 5}});
        CHECK(c.detector.timestep == 300);
        CHECK(c.detector.repeats == 4);
        CHECK(c.detector.omega == 3.0);
        CHECK(c.detector.detect_space == FeatureLevel::Logit);
        CHECK(c.field_source == "analytic");
        CHECK(c.data.mixture.size() == 2);

        CHECK_THROWS_AS(parse_config(json{{"sed", 5}}), ConfigError);
        CHECK_THROWS_AS(parse_config(json{{"detector", {{"omgea", 1}}}}), ConfigError);
        CHECK_THROWS_AS(parse_config(json{{"detector", {{"detect_space", "pixels"}}}}), ConfigError);
        CHECK_THROWS_AS(parse_config(json{{"ablation", {{"axis", "width"}, {"values", {1}}}}}), ConfigError);
        CHECK_THROWS_AS(parse_config(json{{"field", {{"source", "both"}}}}), ConfigError);

        // Stage seeds come from the master seed alone.
        const ExperimentConfig a = parse_config(json{{"seed", 5}, {"classifier", {{"epochs", 10}}}});
        CHECK(a.classifier.seed == parse_config(json{{"seed", 5}}).classifier.seed);
        CHECK(a.classifier.seed != parse_config(json{{"seed", 6}}).classifier.seed);

        const ExperimentConfig canonical = load_config(fs::path(DDPOOD_SOURCE_DIR) / "configs/canonical.json");
        const json round = to_json(canonical);
        CHECK(to_json(parse_config(round)) == round);

        json doc = small_document("x");
        apply_override(doc, "detector.omega=2.5");
        apply_override(doc, "detector.method=pndm");
        apply_override(doc, "output_dir=elsewhere");
        const ExperimentConfig o = parse_config(doc);
        CHECK(o.detector.omega == 2.5);
        CHECK(o.detector.method == IntegratorMethod::PNDM);
        CHECK(o.output_dir == fs::path("elsewhere"));
        CHECK_THROWS_AS(apply_override(doc, "no-equals-sign"), ConfigError);
    }

    TEST_CASE("runs are reproducible and the lockfile replays them") {
        const fs::path out = scratch("repro");
        const RunResult first = run_experiment(parse_config(small_document(out)));
        const auto files = snapshot(out);
        for (const char* name : {"report.csv", "samples.json", "config.lock.json", "run_info.json", "classifier.json"})
            CHECK(files.count(name) == 1);
        CHECK(first.rows.size() > 0);
        CHECK(first.classifier_accuracy > 0.9);

        run_experiment(parse_config(small_document(out)));
        CHECK(snapshot(out).at("report.csv") == files.at("report.csv"));

        CHECK(recompute_report(out / "samples.json") == files.at("report.csv"));

        const fs::path lock = scratch("repro_lock.json");
        fs::copy_file(out / "config.lock.json", lock);
        fs::remove_all(out);
        run_experiment(load_config(lock));
        CHECK(snapshot(out) == files);

        // 17 significant digits: the CSV value parses back to the stored double.
        std::istringstream csv(files.at("report.csv"));
        std::string header, line;
        std::getline(csv, header);
        std::getline(csv, line);
        const std::string auc = line.substr(0, line.rfind(',')).substr(line.substr(0, line.rfind(',')).rfind(',') + 1);
        CHECK(std::stod(auc) == first.rows[0].auroc);
        fs::remove_all(out);
        fs::remove(lock);
    }

    TEST_CASE("ablation groups share everything but the swept value") {
        const fs::path out = scratch("ablation");
        json doc = small_document(out);
        doc["data"]["ood_sets"] = {"translate", "ring"};
        doc["ablation"] = {{"axis", "repeat"}, {"values", {1, 2, 4}}};
        const RunResult r = run_experiment(parse_config(doc));
        std::map<std::string, int> per_group;
        for (const auto& row : r.rows) ++per_group[row.group];
        CHECK(per_group.size() == 3);
        CHECK(per_group.count("repeat=1") == 1);
        CHECK(per_group.count("repeat=4") == 1);

        const json samples = json::parse(slurp(out / "samples.json"));
        const auto& groups = samples.at("groups");
        REQUIRE(groups.size() == 3);
        const auto& one = groups[0].at("records");
        const auto& four = groups[2].at("records");
        REQUIRE(one.size() == four.size());
        for (std::size_t i = 0; i < one.size(); ++i) {
            CHECK(one[i].at("repeat_scores").size() == 1);
            CHECK(four[i].at("repeat_scores").size() == 4);
            CHECK(one[i].at("repeat_scores")[0] == four[i].at("repeat_scores")[0]);
            CHECK(one[i].at("x") == four[i].at("x"));
        }

        doc["ablation"] = {{"axis", "timestep"}, {"values", {100, 300, 600, 900}}};
        doc["data"]["ood_sets"] = {"translate"};
        const RunResult t = run_experiment(parse_config(doc));
        std::map<std::string, int> seen;
        for (const auto& row : t.rows) ++seen[row.group];
        CHECK(seen.size() == 4);
        CHECK(seen.count("timestep=900") == 1);

        doc["ablation"] = {{"axis", "timestep"}, {"values", {110}}};
        CHECK_THROWS_AS(run_experiment(parse_config(doc)), StageError);
        fs::remove_all(out);
    }

    TEST_CASE("failures name the stage and leave no outputs") {
        const fs::path out = scratch("failure");
        json doc = small_document(out);
        doc["field"] = {{"source", "trained"}, {"denoiser", {{"hidden_width", 8}, {"epochs", 3}, {"learning_rate", 1e300}}}};
        try {
            run_experiment(parse_config(doc));
            FAIL("expected a failure");
        } catch (const StageError& e) {
            CHECK(e.stage() == "field");
        }
        CHECK((!fs::exists(out) || fs::is_empty(out)));

        json bad = small_document(out);
        bad["detector"]["timestep"] = 410;
        try {
            run_experiment(parse_config(bad));
            FAIL("expected a failure");
        } catch (const StageError& e) {
            CHECK(e.stage() == "config");
        }

        // A failed run leaves an earlier run's results alone.
        run_experiment(parse_config(small_document(out)));
        const auto before = snapshot(out);
        CHECK_THROWS_AS(run_experiment(parse_config(doc)), StageError);
        CHECK(snapshot(out) == before);
        fs::remove_all(out);
    }

    TEST_CASE("invertibility table") {
        auto schedule = std::make_shared<const NoiseSchedule>(default_schedule());
        const auto mixture = canonical_mixture();
        const MixtureField field(mixture, schedule);
        const std::vector<IntegratorMethod> methods{IntegratorMethod::DDIM, IntegratorMethod::PF};
        const std::vector<int> t_max{200, 1000};
        const auto rows = invertibility_table(field, mixture, methods, t_max, 20, 8, 3);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].method == "ddim");
        CHECK(rows[0].mean_error <= rows[0].max_error);
        CHECK(rows[1].mean_error > rows[0].mean_error);
        CHECK(rows[3].mean_error < rows[1].mean_error);
        CHECK(invertibility_csv(rows).rfind("method,t_max,stride,mean_error,max_error\n", 0) == 0);
    }

    TEST_CASE("command line") {
        const fs::path dir = scratch("cli");
        fs::create_directories(dir);
        const fs::path log = dir / "log.txt";
        fs::path config = dir / "config.json";
        {
            std::ofstream(config) << small_document(dir / "run").dump(2);
        }
        CHECK(run_cli("run -c \"" + config.string() + "\" --set detector.repeats=1", log) == 0);
        CHECK(fs::exists(dir / "run" / "report.csv"));
        CHECK(run_cli("metrics --samples \"" + (dir / "run" / "samples.json").string() + "\" -o \"" +
                          (dir / "again.csv").string() + "\"",
                      log) == 0);
        CHECK(slurp(dir / "again.csv") == slurp(dir / "run" / "report.csv"));

        CHECK(run_cli("run -c \"" + config.string() + "\" --set detector.timestep=401", log) != 0);
        CHECK(slurp(log).find("config") != std::string::npos);
        CHECK(run_cli("run -c \"" + (dir / "missing.json").string() + "\"", log) != 0);

        CHECK(run_cli("toy --n 64 --budget 200", log) == 0);
        const std::string toy = slurp(log);
        CHECK(toy.find("identity") != std::string::npos);

        CHECK(run_cli("invertibility --t-max 200,1000 --methods ddim,pf --points 4 -o \"" +
                          (dir / "inv.csv").string() + "\"",
                      log) == 0);
        CHECK(slurp(dir / "inv.csv").rfind("method,t_max,stride,mean_error,max_error\n", 0) == 0);

        CHECK(run_cli("interpolate --mode asymmetric --stride 100 -o \"" + (dir / "interp.csv").string() + "\"", log) ==
              0);
        CHECK(slurp(dir / "interp.csv").rfind("mode,parameter,x0,x1\nasymmetric,0,", 0) == 0);

        {
            std::ofstream(dir / "points.csv") << "x0,x1\n2,0\n0,9\n";
        }
        CHECK(run_cli("detect -c \"" + config.string() + "\" --classifier \"" +
                          (dir / "run" / "classifier.json").string() + "\" --samples \"" +
                          (dir / "points.csv").string() + "\" -o \"" + (dir / "scores.csv").string() + "\"",
                      log) == 0);
        const std::string scores = slurp(dir / "scores.csv");
        CHECK(scores.rfind("index,pseudo_label,ddp_score,decision\n0,", 0) == 0);
        fs::remove_all(dir);
    }
}
