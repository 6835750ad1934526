#include "fprig/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fprig/error.hpp"
#include "fprig/experiment.hpp"
#include "fprig/file_util.hpp"
#include "fprig/http_server.hpp"
#include "fprig/http_util.hpp"
#include "fprig/ingest_service.hpp"
#include "fprig/integrity.hpp"
#include "fprig/sensor_sim.hpp"
#include "fprig/session_store.hpp"

namespace fprig {

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') return std::string(v);
    return std::nullopt;
  };
}

CliConfig resolve_cli_config(const CliFlags& flags, const EnvLookup& env) {
  CliConfig c;
  if (flags.data_dir) c.data_dir = *flags.data_dir;
  else if (auto v = env("FPRIG_DATA_DIR")) c.data_dir = *v;

  if (flags.port) {
    c.port = *flags.port;
  } else if (auto v = env("FPRIG_PORT")) {
    try {
      std::size_t used = 0;
      c.port = std::stoi(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::validation, "FPRIG_PORT: expected an integer, got '" + *v + "'", "FPRIG_PORT");
    }
  }
  if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::validation, "port: must be in [0, 65535]", "port");

  if (flags.attest_url) c.attest_url = *flags.attest_url;
  else if (auto v = env("FPRIG_ATTEST_URL")) c.attest_url = *v;

  if (flags.seed) c.seed = *flags.seed;
  return c;
}

std::filesystem::path attestation_store_path(const CliConfig& config) {
  return config.data_dir / "attestations.jsonl";
}

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return kExitNotFound;
    case ErrorCode::transport:
    case ErrorCode::io:
    case ErrorCode::provider: return kExitStartup;
    default: return kExitValidation;
  }
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, path + ": " + e.what(), path);
  }
}

struct Services {
  std::unique_ptr<SessionStore> store;
  std::unique_ptr<AttestationStore> attestations;  // null when remote
  std::unique_ptr<Attestor> attestor;
  std::unique_ptr<IngestService> ingest;
};

Services open_services(const CliConfig& c) {
  Services s;
  std::filesystem::create_directories(c.data_dir);
  s.store = std::make_unique<SessionStore>(c.data_dir);
  if (c.attest_url.empty()) {
    s.attestations = std::make_unique<AttestationStore>(attestation_store_path(c));
    s.attestor = std::make_unique<LocalAttestor>(*s.attestations);
  } else {
    s.attestor = std::make_unique<HttpAttestor>(c.attest_url);
  }
  s.ingest = std::make_unique<IngestService>(*s.store, *s.attestor);
  return s;
}

int cmd_serve(const CliConfig& c, const std::string& host, const std::string& console_dir, std::ostream& out) {
  // Block the shutdown signals before any thread exists so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto services = open_services(c);
  HttpServer server(*services.ingest, services.attestations.get(), {host, c.port, console_dir});
  server.start();
  out << "listening on " << server.url() << std::endl;
  spdlog::info("data dir {}, attestation {}", c.data_dir.string(),
               c.attest_url.empty() ? std::string("in-process") : c.attest_url);

  int sig = 0;
  sigwait(&signals, &sig);
  spdlog::info("signal {} received, shutting down", sig);
  server.stop();
  services.ingest->flush_open_buffers();
  return kExitOk;
}

int cmd_verify(const CliConfig& c, const std::string& session_id, std::ostream& out) {
  Json report;
  if (!c.attest_url.empty()) {
    JsonClient client(c.attest_url);
    report = client.post("/verify", {{"session_id", session_id}});
  } else {
    SessionStore store(c.data_dir);
    if (!std::filesystem::exists(c.data_dir) || !store.exists(session_id)) {
      throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'", "session_id");
    }
    AttestationStore attestations(attestation_store_path(c));
    report = chain_report_to_json(verify_chain(store, session_id, attestations));
  }
  out << report.dump(2) << std::endl;
  return report.at("verdict") == "intact" ? kExitOk : kExitVerifyFailed;
}

int cmd_export(const CliConfig& c, const std::string& session_id, std::int64_t t0, std::int64_t t1,
               const std::string& kinds, const std::string& out_path, std::ostream& out, std::ostream& err) {
  SessionStore store(c.data_dir);
  if (!std::filesystem::exists(c.data_dir) || !store.exists(session_id)) {
    throw Error(ErrorCode::not_found, "unknown session '" + session_id + "'", "session_id");
  }
  auto records = timeline_query(store, session_id, t0, t1, parse_kinds(kinds));
  std::string lines;
  for (const auto& r : records) lines += canonical_dump(record_to_json(r)) + "\n";
  Json summary{{"session_id", session_id}, {"t0", t0}, {"t1", t1}, {"records", records.size()}};
  if (out_path.empty() || out_path == "-") {
    out << lines;
    err << summary.dump() << std::endl;
  } else {
    write_file_atomic(out_path, lines);
    summary["out"] = out_path;
    out << summary.dump(2) << std::endl;
  }
  return kExitOk;
}

int cmd_sim_run(const CliConfig& c, const std::string& scenario_path, std::string endpoint,
                std::optional<std::uint64_t> seed, bool listen, std::ostream& out) {
  auto scenario = scenario_from_json(read_json_file(scenario_path));
  if (seed) {
    scenario.rng_seed = *seed;
    scenario.config.rng_seed = *seed;
  }
  if (endpoint.empty()) endpoint = "http://127.0.0.1:" + std::to_string(c.port);
  auto summary = run_scenario(scenario, endpoint, listen);
  out << summary_to_json(summary).dump(2) << std::endl;
  return kExitOk;
}

int cmd_exp_run(const CliConfig& c, const std::string& script_path, const std::string& out_dir,
                const std::string& reference_path, std::string session_id, std::ostream& out) {
  auto script = script_from_json(read_json_file(script_path));
  if (!reference_path.empty()) {
    for (const auto& [id, v] : parse_reference_csv(read_file(reference_path))) script.reference[id] = v;
  }
  SessionConfig config;
  config.session_id = session_id.empty() ? "exp-" + std::to_string(c.seed) + "-" +
                                               std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(
                                                                  std::chrono::system_clock::now().time_since_epoch())
                                                                  .count())
                                         : session_id;
  config.rng_seed = c.seed;
  auto services = open_services(c);
  auto results = run_stimulus_session(script, config, c.seed, *services.ingest);
  auto emitted = emit_results(results);

  std::filesystem::create_directories(out_dir);
  write_file_atomic(std::filesystem::path(out_dir) / "results.csv", emitted.csv);
  Json plot = emitted.plot;
  plot["session_id"] = config.session_id;
  Json report{{"session_id", config.session_id}, {"results", plot["series"]}};
  std::size_t referenced = 0;
  for (const auto& r : results) referenced += r.ref_arousal.has_value();
  if (referenced >= 2) {
    auto cmp = compare_reference(results, script.reference);
    Json r = std::isnan(cmp.pearson_r) ? Json(nullptr) : Json(cmp.pearson_r);
    plot["pearson_r"] = r;
    report["pearson_r"] = r;
    if (cmp.warning) {
      report["warning"] = *cmp.warning;
      spdlog::warn("{}", *cmp.warning);
    }
  }
  write_file_atomic(std::filesystem::path(out_dir) / "plot.json", plot.dump(2) + "\n");
  out << report.dump(2) << std::endl;
  return kExitOk;
}

int cmd_exp_estimate(double gb, const std::string& mode, std::ostream& out) {
  auto days = estimate_recording_days(gb, recording_mode_from_string(mode));
  out << Json{{"corpus_gb", gb}, {"mode", mode}, {"days", round_sig2(days)}, {"days_display", format_sig2(days)},
              {"days_unrounded", days}}
             .dump(2)
      << std::endl;
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"fprig: first-person recording rig", "fprig"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  CliFlags flags;
  std::string data_dir, attest_url;
  int port = 0;
  std::uint64_t seed = 0;
  auto* o_data = app.add_option("--data-dir", data_dir, "session directory root (env FPRIG_DATA_DIR)");
  auto* o_port = app.add_option("--port", port, "service port (env FPRIG_PORT)");
  auto* o_attest = app.add_option("--attest-url", attest_url, "remote attestation service (env FPRIG_ATTEST_URL)");
  auto* o_seed = app.add_option("--seed", seed, "RNG seed");

  auto* serve = app.add_subcommand("serve", "run the ingestion, attestation and console services");
  std::string host = "127.0.0.1", console_dir;
  serve->add_option("--host", host, "listen address");
  serve->add_option("--console-dir", console_dir, "static console assets served under /console/");

  auto* sim = app.add_subcommand("sim", "sensor simulator");
  sim->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "stream a scenario to a running service");
  std::string scenario_path, endpoint;
  bool no_tones = false;
  sim_run->add_option("--scenario", scenario_path, "scenario JSON")->required();
  sim_run->add_option("--endpoint", endpoint, "service URL (default http://127.0.0.1:<port>)");
  sim_run->add_flag("--no-tones", no_tones, "do not subscribe to DES tone prompts");

  auto* exp = app.add_subcommand("exp", "experiment harness");
  exp->require_subcommand(1);
  auto* exp_run = exp->add_subcommand("run", "record a stimulus script and summarize arousal");
  std::string script_path, out_dir, reference_path, exp_session;
  exp_run->add_option("--script", script_path, "stimulus script JSON")->required();
  exp_run->add_option("--out", out_dir, "output directory")->required();
  exp_run->add_option("--reference", reference_path, "reference CSV stimulus_id,ref_arousal");
  exp_run->add_option("--session", exp_session, "session id (default exp-<seed>-<epoch ms>)");
  auto* exp_est = exp->add_subcommand("estimate", "days of recording needed for a corpus");
  double gb = 0;
  std::string mode = "full";
  exp_est->add_option("--gb", gb, "corpus size in GB")->required();
  exp_est->add_option("--mode", mode, "full | text");

  auto* verify = app.add_subcommand("verify", "verify a session's integrity chain");
  std::string session_id;
  verify->add_option("session_id", session_id, "session id")->required();

  auto* exp_cmd = app.add_subcommand("export", "write session records as JSON lines");
  std::int64_t t0 = 0, t1 = std::numeric_limits<std::int64_t>::max();
  std::string kinds, out_path = "-";
  exp_cmd->add_option("session_id", session_id, "session id")->required();
  exp_cmd->add_option("--t0", t0, "window start ms (inclusive)");
  exp_cmd->add_option("--t1", t1, "window end ms (exclusive)");
  exp_cmd->add_option("--kinds", kinds, "comma-separated kinds, 'des' or 'all'");
  exp_cmd->add_option("--out", out_path, "output file, '-' for stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return e.get_exit_code() == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (o_data->count() > 0) flags.data_dir = data_dir;
    if (o_port->count() > 0) flags.port = port;
    if (o_attest->count() > 0) flags.attest_url = attest_url;
    if (o_seed->count() > 0) flags.seed = seed;
    const auto config = resolve_cli_config(flags, env);

    if (serve->parsed()) {
      try {
        return cmd_serve(config, host, console_dir, out);
      } catch (const Error& e) {
        err << "fprig serve: " << e.what() << "\n";
        return kExitStartup;
      }
    }
    if (sim_run->parsed()) {
      return cmd_sim_run(config, scenario_path, endpoint, flags.seed, !no_tones, out);
    }
    if (exp_run->parsed()) return cmd_exp_run(config, script_path, out_dir, reference_path, exp_session, out);
    if (exp_est->parsed()) return cmd_exp_estimate(gb, mode, out);
    if (verify->parsed()) return cmd_verify(config, session_id, out);
    if (exp_cmd->parsed()) return cmd_export(config, session_id, t0, t1, kinds, out_path, out, err);
  } catch (const Error& e) {
    err << "fprig: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "fprig: " << e.what() << "\n";
    return kExitStartup;
  }
  return kExitValidation;
}

}  // namespace fprig
