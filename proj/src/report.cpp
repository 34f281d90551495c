#include "locg/report.hpp"

#include <atomic>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace locg::bench {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int default_max_iter(const std::string& problem) {
  return problem == "outlier_cluster" ? 500 : 3000;
}

namespace {
// Fixed conjugation seeds: the synthetic matrices are the same across trials;
// only the starting blocks vary with the trial seed.
constexpr std::uint64_t kClusterOutlierSeed = 9001;
constexpr std::uint64_t kOutlierClusterSeed = 9002;
}  // namespace

problems::Problem make_problem(const Manifest& m) {
  if (!m.matrix_path.empty()) return problems::load_matrix_market(m.matrix_path);
  if (m.problem == "laplacian2d") return problems::laplacian2d(m.N);
  if (m.problem == "cluster_outlier")
    return problems::cluster_outlier(kClusterOutlierSeed, m.n);
  if (m.problem == "outlier_cluster")
    return problems::outlier_cluster(kOutlierClusterSeed, m.n);
  throw std::runtime_error("unknown problem: " + m.problem);
}

std::vector<Triple> paper13() {
  return {{1, 1, 0}, {1, 1, 1}, {1, 1, 2}, {1, 1, 4}, {1, 2, 1}, {1, 2, 2},
          {1, 4, 1}, {2, 1, 0}, {2, 1, 1}, {2, 2, 1}, {3, 1, 0}, {3, 1, 1},
          {3, 2, 1}};
}

TrialRun run_trial(const problems::Problem& p, const Manifest& m, Triple t,
                   std::uint64_t seed) {
  SolverConfig cfg;
  cfg.n_b = t.nb;
  cfg.m_e = t.me;
  cfg.m_h = t.mh;
  cfg.max_iter = m.max_iter > 0 ? m.max_iter : default_max_iter(m.problem);
  cfg.stop_rel = m.stop_rel;
  cfg.a_scale = p.a_scale;

  Preconditioner K = Preconditioner::Identity();
  if (m.precond == "jacobi") {
    if (!p.op.dense_form)
      throw std::runtime_error("jacobi preconditioner needs a dense form");
    K = Preconditioner::Jacobi(p.op.dense_form->diagonal());
  } else if (m.precond != "identity") {
    throw std::runtime_error("unknown preconditioner: " + m.precond);
  }

  const Matrix X0 = problems::starting_block(p.op.n, t.nb, seed);
  const double lambda1 = p.summary.lambda_1;
  TrialRun run;
  run.triple = t;
  run.seed = seed;
  run.result = locg_solve(p.op, K, X0, cfg, &lambda1);
  return run;
}

std::vector<double> eps_series(const SolveResult& r, double lambda1) {
  std::vector<double> eps;
  eps.reserve(r.trace.records.size());
  for (const auto& rec : r.trace.records) eps.push_back(rec.ritz(0) - lambda1);
  return eps;
}

std::vector<double> sigma_series(const SolveResult& r, const Triple& t) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out;
  out.reserve(r.trace.records.size());
  for (const auto& rec : r.trace.records) {
    if (t.nb == 1) {
      out.push_back(rec.sigma);
    } else if (t.mh == 0) {
      out.push_back(0.0);
    } else if (rec.block.available) {
      out.push_back(rec.block.sigma);
    } else {
      out.push_back(nan);
    }
  }
  return out;
}

namespace {

std::string base_name(const Manifest& m, const TrialRun& run) {
  std::ostringstream os;
  std::string pname = m.matrix_path.empty() ? m.problem : "matrix";
  os << pname << "_nb" << run.triple.nb << "me" << run.triple.me << "mh"
     << run.triple.mh << "_seed" << run.seed;
  return os.str();
}

// Error floor below which ratios are roundoff noise, not rate information.
double eps_floor(const SpectralSummary& s) {
  return 1e2 * std::numeric_limits<double>::epsilon() * std::abs(s.lambda_1);
}

void write_trace_csv(const std::string& path, const problems::Problem& p,
                     const TrialRun& run) {
  const auto& recs = run.result.trace.records;
  const auto eps = eps_series(run.result, p.summary.lambda_1);
  const auto sig = sigma_series(run.result, run.triple);
  const double C = rate::bound_C(p.summary, run.triple.me);
  const double floor = eps_floor(p.summary);
  const int mh = run.triple.mh;

  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "iter,rho_1,resnorm_1,err_rel_1,sigma,ratio_two_step,ratio_vs_bound\n";
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& rec = recs[k];
    f << rec.iter << ',' << format_double(rec.ritz(0)) << ','
      << format_double(rec.resnorms(0)) << ',';
    if (rec.errs_rel.size() > 0) f << format_double(rec.errs_rel(0));
    f << ',';
    if (std::isfinite(sig[k])) f << format_double(sig[k]);
    f << ',';
    if (k >= 2 && eps[k] > floor && eps[k - 2] > floor)
      f << format_double(eps[k] / eps[k - 2]);
    f << ',';
    // One-step ratio against the theoretical per-step factor:
    // sqrt(chi(sigma_k, C)) in the history case, C itself when m_h = 0.
    if (k >= 1 && eps[k] > floor && eps[k - 1] > floor) {
      double bound;
      if (mh == 0) {
        bound = C;
      } else {
        const double s = std::isfinite(sig[k]) ? std::max(sig[k], 1.0) : 1.0;
        bound = std::sqrt(rate::chi(s, C));
      }
      if (bound > 0) f << format_double(eps[k] / (bound * eps[k - 1]));
    }
    f << '\n';
  }
}

void write_rate_csv(const std::string& path, const problems::Problem& p,
                    const TrialRun& run) {
  const auto eps = eps_series(run.result, p.summary.lambda_1);
  const auto sig = sigma_series(run.result, run.triple);
  const auto rep =
      rate::rate_report(eps, sig, p.summary, run.triple.me, run.triple.mh);
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "iter,eps,step_ratio,step_bound,ratio_vs_bound,sigma,multi_ratio,multi_bound\n";
  for (const auto& row : rep.rows) {
    f << row.iter << ',' << format_double(row.eps) << ','
      << format_double(row.step_ratio) << ',' << format_double(row.step_bound)
      << ',' << format_double(row.ratio_vs_bound) << ','
      << format_double(row.sigma) << ',';
    if (row.multi_available)
      f << format_double(row.multi_ratio) << ',' << format_double(row.multi_bound);
    else
      f << ',';
    f << '\n';
  }
}

void write_timing_csv(const std::string& path, const TrialRun& run) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "iter,wall_time,ops\n";
  for (const auto& rec : run.result.trace.records)
    f << rec.iter << ',' << format_double(rec.wall_time) << ',' << rec.ops << '\n';
}

void write_summary_json(const std::string& path, const Manifest& m,
                        const TrialRun& run) {
  nlohmann::json j;
  j["problem"] = m.matrix_path.empty() ? m.problem : m.matrix_path;
  j["nb"] = run.triple.nb;
  j["me"] = run.triple.me;
  j["mh"] = run.triple.mh;
  j["seed"] = run.seed;
  j["outcome"] = outcome_name(run.result.outcome);
  j["iters"] = run.result.iters;
  double fe = std::numeric_limits<double>::quiet_NaN();
  if (!run.result.trace.records.empty()) {
    const auto& last = run.result.trace.records.back();
    if (last.errs_rel.size() > 0) fe = last.errs_rel(0);
  }
  if (std::isfinite(fe))
    j["final_err_rel"] = fe;
  else
    j["final_err_rel"] = nullptr;
  if (run.result.outcome == Outcome::Breakdown)
    j["breakdown_iter"] = run.result.breakdown_iter;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << j.dump(2) << '\n';
}

}  // namespace

TrialFiles write_trial(const problems::Problem& p, const Manifest& m,
                       const TrialRun& run) {
  fs::create_directories(m.out_dir);
  const std::string base = (fs::path(m.out_dir) / base_name(m, run)).string();
  TrialFiles files{base + "_trace.csv", base + "_rate.csv", base + "_timing.csv",
                   base + "_summary.json"};
  write_trace_csv(files.trace, p, run);
  write_rate_csv(files.rate, p, run);
  write_timing_csv(files.timing, run);
  write_summary_json(files.summary, m, run);
  return files;
}

std::vector<TrialFiles> run_manifest(const Manifest& m, bool* had_breakdown) {
  const problems::Problem p = make_problem(m);
  struct Job {
    Triple t;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const Triple& t : m.triples)
    for (int i = 0; i < m.trials; ++i)
      jobs.push_back({t, m.seed0 + static_cast<std::uint64_t>(i)});

  std::vector<TrialFiles> files(jobs.size());
  std::atomic<bool> any_breakdown{false};

  int threads = 1;
  if (const char* env = std::getenv("LOCG_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  threads = std::min<int>(threads, static_cast<int>(jobs.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        TrialRun run = run_trial(p, m, jobs[i].t, jobs[i].seed);
        if (run.result.outcome == Outcome::Breakdown) any_breakdown = true;
        files[i] = write_trial(p, m, run);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  if (had_breakdown) *had_breakdown = any_breakdown.load();
  return files;
}

SigmaRow sigma_stats(const TrialRun& run) {
  SigmaRow row;
  row.triple = run.triple;
  row.seed = run.seed;
  const auto& recs = run.result.trace.records;
  if (recs.size() < 4) {
    row.insufficient = true;
    return row;
  }
  const auto sig = sigma_series(run.result, run.triple);
  const std::size_t start = sig.size() / 2;  // last 50%
  double mn = std::numeric_limits<double>::infinity();
  double mx = -std::numeric_limits<double>::infinity();
  double sum = 0;
  std::size_t cnt = 0;
  for (std::size_t k = start; k < sig.size(); ++k) {
    if (!std::isfinite(sig[k])) continue;
    // m_h = 0 runs carry no history term (sigma = 0 by convention); their
    // Table-2-style sigma - 1 entry is 0, not -1.
    const double sm1 = run.triple.mh == 0 ? 0.0 : sig[k] - 1.0;
    mn = std::min(mn, sm1);
    mx = std::max(mx, sm1);
    sum += sm1;
    ++cnt;
  }
  if (cnt == 0) {
    row.insufficient = true;
    return row;
  }
  row.min_sm1 = mn;
  row.mean_sm1 = sum / static_cast<double>(cnt);
  row.max_sm1 = mx;
  return row;
}

namespace {
std::string render_sm1(double v) {
  if (std::abs(v) < 1e-8) return "0";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1e", v);
  std::string s = buf;
  if (v > 1.0) s += " *";  // Table 2 bolds values above 1
  return s;
}
}  // namespace

std::string render_sigma_table(const std::string& problem,
                               const std::vector<SigmaRow>& rows) {
  std::ostringstream os;
  os << "sigma - 1 over the last 50% of iterations  (problem: " << problem
     << ")\n";
  os << "values below 1e-8 shown as 0; values above 1 marked with *\n";
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s %-6s %-12s %-12s %-12s\n",
                "(nb,me,mh)", "seed", "min", "mean", "max");
  os << line;
  for (const auto& r : rows) {
    std::ostringstream trip;
    trip << '(' << r.triple.nb << ',' << r.triple.me << ',' << r.triple.mh << ')';
    if (r.insufficient) {
      std::snprintf(line, sizeof(line), "%-12s %-6llu %s\n", trip.str().c_str(),
                    static_cast<unsigned long long>(r.seed), "insufficient");
    } else {
      std::snprintf(line, sizeof(line), "%-12s %-6llu %-12s %-12s %-12s\n",
                    trip.str().c_str(), static_cast<unsigned long long>(r.seed),
                    render_sm1(r.min_sm1).c_str(), render_sm1(r.mean_sm1).c_str(),
                    render_sm1(r.max_sm1).c_str());
    }
    os << line;
  }
  return os.str();
}

std::vector<TraceRow> parse_trace_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("empty trace file: " + path);
  if (line.rfind("iter,rho_1,resnorm_1,err_rel_1,sigma", 0) != 0)
    throw std::runtime_error("unrecognized trace header in " + path);
  std::vector<TraceRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    cells.resize(7);
    TraceRow r;
    r.iter = std::stoi(cells[0]);
    r.rho_1 = std::stod(cells[1]);
    r.resnorm_1 = std::stod(cells[2]);
    auto opt = [](const std::string& s, double& v, bool& has) {
      has = !s.empty();
      if (has) v = std::stod(s);
    };
    opt(cells[3], r.err_rel_1, r.has_err);
    opt(cells[4], r.sigma, r.has_sigma);
    opt(cells[5], r.ratio_two_step, r.has_two_step);
    opt(cells[6], r.ratio_vs_bound, r.has_bound);
    rows.push_back(r);
  }
  return rows;
}

std::vector<double> parse_timing_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line.rfind("iter,wall_time", 0) != 0)
    throw std::runtime_error("unrecognized timing header in " + path);
  std::vector<double> cum;
  double total = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    total += std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    cum.push_back(total);
  }
  return cum;
}

// ---------------------------------------------------------------------------
// SVG rendering: one fixed 3-panel layout, hand-rolled (self-contained file).
namespace {

struct Panel {
  double x0, y0, w, h;           // pixel rectangle
  double umin, umax, vmin, vmax; // data range
  double px(double u) const { return x0 + (u - umin) / (umax - umin) * w; }
  double py(double v) const { return y0 + h - (v - vmin) / (vmax - vmin) * h; }
};

void polyline(std::ostream& os, const Panel& p,
              const std::vector<std::pair<double, double>>& pts,
              const char* color) {
  if (pts.empty()) return;
  os << "<polyline fill=\"none\" stroke=\"" << color
     << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& [u, v] : pts) {
    double x = std::clamp(p.px(u), p.x0 - 2, p.x0 + p.w + 2);
    double y = std::clamp(p.py(v), p.y0 - 2, p.y0 + p.h + 2);
    os << x << ',' << y << ' ';
  }
  os << "\"/>\n";
}

void frame(std::ostream& os, const Panel& p, const std::string& xlabel,
           const std::string& ylabel) {
  os << "<rect x=\"" << p.x0 << "\" y=\"" << p.y0 << "\" width=\"" << p.w
     << "\" height=\"" << p.h
     << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  os << "<text x=\"" << p.x0 + p.w / 2 << "\" y=\"" << p.y0 + p.h + 28
     << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#222\">" << xlabel
     << "</text>\n";
  os << "<text x=\"" << p.x0 - 34 << "\" y=\"" << p.y0 + p.h / 2
     << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#222\" transform=\"rotate(-90 "
     << p.x0 - 34 << ' ' << p.y0 + p.h / 2 << ")\">" << ylabel << "</text>\n";
  // min/max tick labels
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3g", p.umin);
  os << "<text x=\"" << p.x0 << "\" y=\"" << p.y0 + p.h + 14
     << "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#555\">" << buf
     << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", p.umax);
  os << "<text x=\"" << p.x0 + p.w << "\" y=\"" << p.y0 + p.h + 14
     << "\" font-size=\"10\" text-anchor=\"middle\" fill=\"#555\">" << buf
     << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", p.vmin);
  os << "<text x=\"" << p.x0 - 6 << "\" y=\"" << p.y0 + p.h
     << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#555\">" << buf
     << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", p.vmax);
  os << "<text x=\"" << p.x0 - 6 << "\" y=\"" << p.y0 + 8
     << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#555\">" << buf
     << "</text>\n";
}

}  // namespace

void write_convergence_svg(const std::string& path,
                           const std::vector<TraceRow>& rows,
                           const std::vector<double>& cumtime,
                           const std::string& title, int breakdown_iter) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);

  // Data series.
  std::vector<std::pair<double, double>> err_iter, err_time, ratio;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (breakdown_iter >= 0 && r.iter > breakdown_iter) break;
    if (r.has_err && r.err_rel_1 > 0) {
      err_iter.emplace_back(r.iter, std::log10(r.err_rel_1));
      if (k < cumtime.size()) err_time.emplace_back(cumtime[k], std::log10(r.err_rel_1));
    }
  }
  const std::size_t start = rows.size() / 2;  // ratio panel: last 50%
  for (std::size_t k = start; k < rows.size(); ++k) {
    const auto& r = rows[k];
    if (breakdown_iter >= 0 && r.iter > breakdown_iter) break;
    if (r.has_bound && std::isfinite(r.ratio_vs_bound))
      ratio.emplace_back(r.iter, r.ratio_vs_bound);
  }

  auto range = [](const std::vector<std::pair<double, double>>& pts, bool second) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [u, v] : pts) {
      const double x = second ? v : u;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    if (!(lo < hi)) {
      lo -= 1;
      hi += 1;
    }
    return std::pair<double, double>(lo, hi);
  };

  const double W = 1080, H = 330;
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
    << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  f << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << W / 2
    << "\" y=\"18\" font-size=\"14\" text-anchor=\"middle\" fill=\"#111\">"
    << title << (breakdown_iter >= 0 ? "  [breakdown]" : "") << "</text>\n";

  Panel panels[3];
  const std::vector<std::pair<double, double>>* series[3] = {&err_iter, &err_time,
                                                             &ratio};
  const char* xlabels[3] = {"iteration", "wall time (s)", "iteration"};
  const char* ylabels[3] = {"log10 relative error", "log10 relative error",
                            "ratio vs bound"};
  for (int i = 0; i < 3; ++i) {
    Panel& p = panels[i];
    p.x0 = 60 + i * 350;
    p.y0 = 40;
    p.w = 290;
    p.h = 230;
    auto [ulo, uhi] = range(*series[i], false);
    auto [vlo, vhi] = range(*series[i], true);
    if (series[i]->empty()) {
      ulo = 0; uhi = 1; vlo = 0; vhi = 1;
    }
    if (i == 2) {  // keep the guide line at 1 visible
      vlo = std::min(vlo, 0.0);
      vhi = std::max(vhi, 1.5);
    }
    p.umin = ulo; p.umax = uhi; p.vmin = vlo; p.vmax = vhi;
    frame(f, p, xlabels[i], ylabels[i]);
    polyline(f, p, *series[i], i == 2 ? "#c33" : "#226");
  }
  // Guide line at ratio = 1.
  {
    const Panel& p = panels[2];
    f << "<line x1=\"" << p.x0 << "\" y1=\"" << p.py(1.0) << "\" x2=\""
      << p.x0 + p.w << "\" y2=\"" << p.py(1.0)
      << "\" stroke=\"#888\" stroke-dasharray=\"4 3\" stroke-width=\"1\"/>\n";
  }
  if (breakdown_iter >= 0) {
    const Panel& p = panels[0];
    if (breakdown_iter >= p.umin && breakdown_iter <= p.umax) {
      f << "<line x1=\"" << p.px(breakdown_iter) << "\" y1=\"" << p.y0
        << "\" x2=\"" << p.px(breakdown_iter) << "\" y2=\"" << p.y0 + p.h
        << "\" stroke=\"#c33\" stroke-dasharray=\"2 2\" stroke-width=\"1\"/>\n";
    }
  }
  f << "</svg>\n";
}

}  // namespace locg::bench
