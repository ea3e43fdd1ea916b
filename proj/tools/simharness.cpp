// simharness: load runs and golden scenario suites.
//
//   simharness load --instructors 12 --students 50 --seed 7 --threshold-ms 300 --report out.json
//   simharness suite ./scenarios
//
// Exit codes: 0 pass, 1 fail, 2 configuration error.

#include <cstdio>

#include <CLI11.hpp>

#include "classbot/core/error.hpp"
#include "classbot/harness/harness.hpp"

namespace {

int run_load_cmd(const classbot::harness::LoadProfile& profile) {
    const auto report = classbot::harness::run_load(profile);
    std::printf("requests      %llu\n", static_cast<unsigned long long>(report.requests));
    std::printf("p50_ms        %.2f\n", report.p50_ms);
    std::printf("p95_ms        %.2f (threshold %.0f)\n", report.p95_ms, profile.threshold_ms);
    std::printf("max_ms        %.2f\n", report.max_ms);
    std::printf("throughput    %.1f req/s over %.2f s\n", report.throughput_rps, report.wall_s);
    for (const auto& [kind, n] : report.error_counts) {
        std::printf("error %-12s %llu\n", kind.c_str(), static_cast<unsigned long long>(n));
    }
    std::printf("%s\n", report.passed() ? "PASS" : "FAIL");
    return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"classbot simulation harness"};
    app.require_subcommand(1);

    classbot::harness::LoadProfile profile;
    auto* load = app.add_subcommand("load", "drive the REST server with simulated instructors");
    load->add_option("--instructors", profile.instructors, "concurrent instructors")->capture_default_str();
    load->add_option("--students", profile.students_per_group, "students per group")->capture_default_str();
    load->add_option("--seed", profile.seed, "random seed")->capture_default_str();
    load->add_option("--duration-s", profile.duration_s, "10 s lecture rounds per instructor")->capture_default_str();
    load->add_option("--threshold-ms", profile.threshold_ms, "p95 latency bound")->capture_default_str();
    load->add_option("--scenario", profile.scenario, "scenario file whose guild replaces the default classroom");
    load->add_option("--report", profile.report_path, "write the JSON report here");
    load->add_option("--server", profile.server_url, "external server, e.g. http://127.0.0.1:8080");
    load->add_option("--api-key", profile.api_keys, "API key for --server (repeatable)");

    std::string dir;
    auto* suite = app.add_subcommand("suite", "replay scenarios and compare with goldens");
    suite->add_option("dir", dir, "directory of *.jsonl scenarios")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*load) {
            return run_load_cmd(profile);
        }
        const auto report = classbot::harness::run_scenario_suite(dir);
        std::fputs(report.table().c_str(), stdout);
        return report.passed() ? 0 : 1;
    } catch (const classbot::Error& e) {
        std::fprintf(stderr, "simharness: %s\n", e.what());
        return e.kind() == classbot::ErrorKind::invalid_input ? 2 : 1;
    }
}
