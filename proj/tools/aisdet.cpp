// aisdet: train, batch-detect, live-serve and benchmark the AIS normalcy
// pipeline from one binary.

#include <arpa/inet.h>
#include <csignal>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "aisdet/bench.hpp"
#include "aisdet/config.hpp"
#include "aisdet/ingest.hpp"
#include "aisdet/normalcy.hpp"
#include "aisdet/preprocess.hpp"
#include "aisdet/stream.hpp"

namespace {

using namespace aisdet;

constexpr int kExitConfig = 2;
constexpr int kExitEmptyTraining = 3;
constexpr int kExitModel = 4;
constexpr int kExitBind = 5;

struct CommonOpts {
  std::string config_path;
  std::string model_path;
  std::string roi_text;
  int partitions = -1;
  int replicas = -1;
};

AppConfig resolve_config(const CommonOpts& opts) {
  AppConfig cfg = opts.config_path.empty() ? default_config()
                                           : load_config(opts.config_path);
  if (!opts.roi_text.empty()) cfg.roi = parse_roi(opts.roi_text);
  if (opts.partitions > 0) cfg.n_partitions = opts.partitions;
  if (opts.replicas > 0) cfg.replicas = opts.replicas;
  cfg.finalize();
  return cfg;
}

void print_counts(const PipelineCounters& c) {
  std::printf("tracks built:    %llu\n",
              static_cast<unsigned long long>(c.built));
  std::printf("tracks rejected: %llu\n",
              static_cast<unsigned long long>(c.rejected()));
  std::printf("tracks tested:   %llu\n",
              static_cast<unsigned long long>(c.tested));
}

int cmd_train(const CommonOpts& opts, const std::vector<std::string>& inputs) {
  AppConfig cfg = resolve_config(opts);
  std::vector<AisMessage> messages;
  for (const auto& path : inputs) {
    IngestFileStats stats;
    auto batch = read_record_file(path, &stats);
    messages.insert(messages.end(), batch.begin(), batch.end());
    if (stats.errors > 0) {
      std::fprintf(stderr, "%s: %llu malformed lines skipped\n", path.c_str(),
                   static_cast<unsigned long long>(stats.errors));
    }
  }
  auto batch = preprocess_batch(messages, cfg.preprocess);
  print_counts(batch.counters);
  if (batch.tracks.empty()) {
    std::fprintf(stderr, "no usable training tracks\n");
    return kExitEmptyTraining;
  }
  NormalcyModel model =
      NormalcyModel::fit(batch.tracks, cfg.roi, cfg.grid, cfg.normalcy);
  model.save(opts.model_path);
  std::printf("model written to %s (%d validated cells)\n",
              opts.model_path.c_str(), model.validated_cell_count());
  return 0;
}

int cmd_detect(const CommonOpts& opts, const std::string& input,
               const std::string& output, const std::string& format) {
  AppConfig cfg = resolve_config(opts);
  NormalcyModel model = NormalcyModel::load(opts.model_path);

  auto messages = read_record_file(input);
  auto batch = preprocess_batch(messages, cfg.preprocess);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output.empty() && output != "-") {
    file.open(output, std::ios::trunc);
    if (!file) throw std::runtime_error("cannot write " + output);
    out = &file;
  }
  if (format == "csv") *out << "track_id,mmsi,n,k,nfa,decision\n";
  for (size_t i = 0; i < batch.tracks.size(); ++i) {
    Verdict v = detect_track(model, batch.tracks[i], cfg.normalcy,
                             cfg.preprocess.min_detect_points(),
                             batch.track_ids[i].str());
    if (format == "json") {
      Alert a{v.track_id, v.mmsi, v.t_start, v.t_end,
              v.n,        v.k,    v.nfa,     v.decision, 0};
      *out << a.to_json() << "\n";
    } else {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%llu,%d,%d,%.17g,%s\n",
                    v.track_id.c_str(),
                    static_cast<unsigned long long>(v.mmsi), v.n, v.k, v.nfa,
                    std::string(to_string(v.decision)).c_str());
      *out << buf;
    }
  }
  print_counts(batch.counters);
  return 0;
}

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

struct Endpoint {
  std::string host;
  uint16_t port = 0;
};

std::optional<Endpoint> parse_endpoint(const std::string& text) {
  size_t colon = text.rfind(':');
  if (colon == std::string::npos) return std::nullopt;
  Endpoint ep;
  ep.host = text.substr(0, colon);
  try {
    int port = std::stoi(text.substr(colon + 1));
    if (port < 1 || port > 65535) return std::nullopt;
    ep.port = static_cast<uint16_t>(port);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  return ep;
}

/// Line-oriented alert sink: file path or host:port TCP.
class AlertWriter {
 public:
  explicit AlertWriter(const std::string& target) {
    auto ep = parse_endpoint(target);
    if (ep && target.find('/') == std::string::npos) {
      fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd_ < 0) throw std::runtime_error("socket() failed");
      sockaddr_in addr{};
      addr.sin_family = AF_INET;
      addr.sin_port = htons(ep->port);
      if (::inet_pton(AF_INET, ep->host.c_str(), &addr.sin_addr) != 1) {
        throw std::runtime_error("bad alert host " + ep->host);
      }
      if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        throw std::runtime_error("cannot connect to alert sink " + target);
      }
    } else {
      file_.open(target, std::ios::app);
      if (!file_) throw std::runtime_error("cannot open alert file " + target);
    }
  }
  ~AlertWriter() {
    if (fd_ >= 0) ::close(fd_);
  }

  void write(const std::string& line) {
    std::lock_guard lock(mu_);
    if (fd_ >= 0) {
      std::string out = line + "\n";
      size_t off = 0;
      while (off < out.size()) {
        ssize_t n = ::send(fd_, out.data() + off, out.size() - off, MSG_NOSIGNAL);
        if (n <= 0) break;
        off += static_cast<size_t>(n);
      }
    } else {
      file_ << line << "\n";
      file_.flush();
    }
  }

 private:
  std::mutex mu_;
  std::ofstream file_;
  int fd_ = -1;
};

int cmd_serve(const CommonOpts& opts, const std::string& listen,
              const std::string& alerts) {
  AppConfig cfg = resolve_config(opts);
  NormalcyModel model = NormalcyModel::load(opts.model_path);

  auto ep = parse_endpoint(listen);
  if (!ep) throw ConfigError("--listen expects host:port");

  int listener = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener < 0) {
    std::fprintf(stderr, "socket() failed\n");
    return kExitBind;
  }
  int one = 1;
  ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep->port);
  if (::inet_pton(AF_INET, ep->host.c_str(), &addr.sin_addr) != 1) {
    std::fprintf(stderr, "bad listen host %s\n", ep->host.c_str());
    ::close(listener);
    return kExitBind;
  }
  if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listener, 16) != 0) {
    std::fprintf(stderr, "cannot bind %s\n", listen.c_str());
    ::close(listener);
    return kExitBind;
  }

  AlertWriter writer(alerts);
  auto log = std::make_shared<PartitionedLog>(cfg.n_partitions);
  DetectParams detect{cfg.normalcy, cfg.preprocess.min_detect_points()};
  Engine engine(log, cfg.preprocess, &model, detect, cfg.replicas);
  engine.alert_sink = [&](const Alert& a) { writer.write(a.to_json()); };

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  std::thread consumer([&] { engine.run_live([] { return g_stop.load(); }); });

  std::atomic<uint64_t> malformed{0};
  std::vector<std::thread> clients;
  std::mutex clients_mu;

  std::fprintf(stderr, "listening on %s, alerts to %s\n", listen.c_str(),
               alerts.c_str());
  while (!g_stop.load()) {
    fd_set fds;
    FD_ZERO(&fds);
    FD_SET(listener, &fds);
    timeval tv{0, 200000};
    int ready = ::select(listener + 1, &fds, nullptr, nullptr, &tv);
    if (ready <= 0) continue;
    int conn = ::accept(listener, nullptr, nullptr);
    if (conn < 0) continue;
    std::lock_guard lock(clients_mu);
    clients.emplace_back([conn, &log, &malformed] {
      std::string buffer;
      char chunk[4096];
      while (!g_stop.load()) {
        ssize_t n = ::recv(conn, chunk, sizeof(chunk), 0);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<size_t>(n));
        size_t nl;
        while ((nl = buffer.find('\n')) != std::string::npos) {
          std::string line = buffer.substr(0, nl);
          buffer.erase(0, nl + 1);
          if (line.empty()) continue;
          auto parsed = parse_record(line);
          if (parsed.ok()) {
            try {
              log->publish(parsed.value());
            } catch (const LogClosedError&) {
              break;
            }
          } else {
            malformed.fetch_add(1);
          }
        }
      }
      ::close(conn);
    });
  }

  ::close(listener);
  {
    std::lock_guard lock(clients_mu);
    for (auto& t : clients) t.join();
  }
  log->close();
  consumer.join();
  engine.flush_open_tracks();
  std::fprintf(stderr, "shutdown: %llu malformed lines skipped\n",
               static_cast<unsigned long long>(malformed.load()));
  print_counts(engine.counters());
  return 0;
}

int cmd_bench(const CommonOpts& opts, const std::string& scenario_path,
              const std::string& replica_list, const std::string& out_dir,
              const std::string& dump_messages, int64_t seed_override) {
  AppConfig cfg = resolve_config(opts);
  SyntheticScenario scenario = load_scenario(scenario_path);
  if (seed_override >= 0) scenario.seed = static_cast<uint64_t>(seed_override);

  GeneratedTraffic traffic = generate(scenario);
  std::filesystem::create_directories(out_dir);
  write_ground_truth(traffic,
                     std::filesystem::path(out_dir) / "ground_truth.csv");
  if (!dump_messages.empty()) {
    std::ofstream out(dump_messages, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + dump_messages);
    out << "# mmsi,timestamp,lat,lon,sog,cog,source\n";
    for (const auto& m : traffic.messages) out << render_record(m) << "\n";
  }

  NormalcyModel model = NormalcyModel::load(opts.model_path);
  DetectParams detect{cfg.normalcy, cfg.preprocess.min_detect_points()};

  std::vector<int> replica_counts;
  std::istringstream in(replica_list);
  std::string part;
  while (std::getline(in, part, ',')) {
    replica_counts.push_back(std::stoi(part));
  }
  if (replica_counts.empty()) replica_counts.push_back(1);

  for (int replicas : replica_counts) {
    BenchReport report = run_benchmark(traffic, model, cfg.preprocess, detect,
                                       replicas, cfg.n_partitions);
    char name[64];
    std::snprintf(name, sizeof(name), "report-r%d", replicas);
    auto base = std::filesystem::path(out_dir) / name;
    std::ofstream(base.string() + ".json", std::ios::trunc) << report.to_json()
                                                            << "\n";
    std::ofstream(base.string() + ".csv", std::ios::trunc) << report.to_csv();
    std::ofstream(base.string() + "-cdf.csv", std::ios::trunc)
        << report.cdf_csv();
    std::printf("replicas=%d tested=%llu mean=%.6fs tracks/s=%.1f cores=%d\n",
                replicas, static_cast<unsigned long long>(report.tested),
                report.timing.mean, report.tracks_per_s, report.capacity_cores);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AIS stream normalcy detection pipeline"};
  app.require_subcommand(1);
  app.footer(aisdet::config_reference());

  CommonOpts opts;
  std::vector<std::string> train_inputs;
  std::string detect_input, detect_output = "-", format = "csv";
  std::string listen = "127.0.0.1:10110", alerts = "alerts.jsonl";
  std::string scenario_path, replica_list = "1", out_dir = "bench-out";
  std::string dump_messages;
  int64_t seed = -1;

  auto add_common = [&](CLI::App* cmd, bool needs_model) {
    cmd->add_option("--config", opts.config_path, "config file path");
    auto* m = cmd->add_option("--model", opts.model_path, "model file path");
    if (needs_model) m->required();
    cmd->add_option("--roi", opts.roi_text,
                    "ROI override: latmin,latmax,lonmin,lonmax");
    cmd->add_option("--partitions", opts.partitions,
                    "partition count override (default 16)");
    cmd->add_option("--replicas", opts.replicas,
                    "operator replica count override (default 1)");
  };

  auto* train = app.add_subcommand("train", "fit a normalcy model from CSV");
  add_common(train, true);
  train->add_option("inputs", train_inputs, "training record files")
      ->required();

  auto* detect = app.add_subcommand("detect", "score tracks from a CSV batch");
  add_common(detect, true);
  detect->add_option("input", detect_input, "record file to score")->required();
  detect->add_option("--output", detect_output, "verdict output path (- = stdout)");
  detect->add_option("--format", format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* serve = app.add_subcommand("serve", "live TCP ingest and alerting");
  add_common(serve, true);
  serve->add_option("--listen", listen, "ingest endpoint host:port");
  serve->add_option("--alerts", alerts, "alert sink: file path or host:port");

  auto* bench = app.add_subcommand("bench", "synthetic benchmark run");
  add_common(bench, true);
  bench->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  bench->add_option("--replicas-list", replica_list,
                    "comma-separated replica counts to benchmark");
  bench->add_option("--out-dir", out_dir, "report output directory");
  bench->add_option("--dump-messages", dump_messages,
                    "also write the generated traffic as a record CSV");
  bench->add_option("--seed", seed, "scenario seed override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(opts, train_inputs);
    if (detect->parsed()) {
      return cmd_detect(opts, detect_input, detect_output, format);
    }
    if (serve->parsed()) return cmd_serve(opts, listen, alerts);
    if (bench->parsed()) {
      return cmd_bench(opts, scenario_path, replica_list, out_dir,
                       dump_messages, seed);
    }
  } catch (const aisdet::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const aisdet::EmptyTrainingSetError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitEmptyTraining;
  } catch (const aisdet::ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return kExitModel;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
