#include "derms/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace derms {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
  return j;
}

int bus_index(const NetworkModel& net, const json& ref, const std::string& what) {
  if (ref.is_number_integer()) {
    const int b = ref.get<int>();
    if (b < 0 || b >= net.bus_count()) throw ConfigError(what + ": bus index out of range");
    return b;
  }
  const std::string name = ref.get<std::string>();
  for (int b = 0; b < net.bus_count(); ++b) {
    if (net.bus_names[b] == name) return b;
  }
  throw ConfigError(what + ": unknown bus '" + name + "'");
}

NetworkModel network_from_json(const json& j) {
  NetworkModel net;
  try {
    net.base_power_w = j.at("base_power_w").get<double>();
    net.base_voltage_v = j.at("base_voltage_v").get<double>();
    net.source_voltage_v = j.value("source_voltage_v", net.base_voltage_v);
    net.tap_ratio = j.value("tap_ratio", 1.0);
    for (const json& b : j.at("buses")) {
      net.bus_names.push_back(b.at("name").get<std::string>());
      net.loads.push_back(BusLoad{b.value("load_p_w", 0.0), b.value("load_q_var", 0.0)});
    }
    for (const json& l : j.at("lines")) {
      Line line;
      line.from = bus_index(net, l.at("from"), "line");
      line.to = bus_index(net, l.at("to"), "line");
      line.r_ohm = l.at("r_ohm").get<double>();
      line.x_ohm = l.at("x_ohm").get<double>();
      net.lines.push_back(line);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  try {
    net.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("network: ") + e.what());
  }
  return net;
}

Profile profile_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return Profile::constant(j.get<double>());
  if (j.is_object() && j.contains("csv")) return profile_from_csv_file(j.at("csv"));
  if (j.is_object() && j.contains("values")) {
    Profile p;
    p.granularity_s = j.at("granularity_s").get<double>();
    p.values = j.at("values").get<std::vector<double>>();
    if (p.values.empty() || !(p.granularity_s > 0.0)) {
      throw ConfigError(what + ": empty or malformed profile");
    }
    return p;
  }
  throw ConfigError(what + ": expected a number, {csv: path}, or {granularity_s, values}");
}

BoundSchedule schedule_from_json(const json& j, ServiceKind kind, double base_power_w) {
  BoundSchedule b;
  for (const json& e : j.at("schedule")) {
    BoundSchedule::Entry entry;
    entry.t_s = e.value("t_s", 0.0);
    if (e.contains("setpoint_w")) {
      const double sp = e.at("setpoint_w").get<double>();
      const double band = e.at("band_w").get<double>();
      entry.lower = (sp - band) / base_power_w;
      entry.upper = (sp + band) / base_power_w;
    } else if (e.contains("lower_w")) {
      entry.lower = e.at("lower_w").get<double>() / base_power_w;
      entry.upper = e.at("upper_w").get<double>() / base_power_w;
    } else if (e.contains("lower_pu")) {
      entry.lower = e.at("lower_pu").get<double>();
      entry.upper = e.at("upper_pu").get<double>();
    } else {
      throw ConfigError("bound schedule entry: expected setpoint_w/band_w, lower_w/upper_w, "
                        "or lower_pu/upper_pu");
    }
    if (kind == ServiceKind::voltage && e.contains("setpoint_w")) {
      throw ConfigError("voltage bounds must be given in p.u.");
    }
    b.entries.push_back(entry);
  }
  return b;
}

DerDevice device_from_json(const json& j, const NetworkModel& net) {
  DerDevice d;
  d.id = j.at("id").get<std::string>();
  d.bus = bus_index(net, j.at("bus"), "device '" + d.id + "'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pv") {
    d.kind = DerDevice::Kind::pv;
    d.pv = PvParams::rated(j.at("inverter_w").get<double>());
  } else if (kind == "battery") {
    d.kind = DerDevice::Kind::battery;
    BatteryParams b;
    b.cap_wh = j.at("capacity_wh").get<double>();
    b.p_charge_max_w = j.at("charge_limit_w").get<double>();
    b.p_discharge_max_w = j.at("discharge_limit_w").get<double>();
    b.soc_min_pct = j.value("soc_min_pct", 10.0);
    b.soc_max_pct = j.value("soc_max_pct", 90.0);
    b.soc_pref_pct = j.value("soc_pref_pct", 60.0);
    d.battery = b;
  } else {
    throw ConfigError("device '" + d.id + "': unknown kind '" + kind + "'");
  }
  return d;
}

Scenario scenario_from_json(const json& j, const std::string& dir) {
  Scenario sc;
  try {
    sc.id = j.at("id").get<std::string>();
    sc.horizon_s = j.at("horizon_s").get<double>();
    sc.tick_s = j.value("tick_s", 2.0);
    sc.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("mode")) {
      const std::string m = j.at("mode").get<std::string>();
      if (m == "adaptive") sc.mode = RunMode::adaptive;
      else if (m == "manual") sc.mode = RunMode::manual;
      else throw ConfigError("scenario: unknown mode '" + m + "'");
    }
    const json& jn = j.at("network");
    sc.network = jn.contains("file")
                     ? network_from_json(load_json(dir + "/" + jn.at("file").get<std::string>()))
                     : network_from_json(jn);

    for (const json& jd : j.at("devices")) {
      ScenarioDevice d;
      d.device = device_from_json(jd, sc.network);
      if (d.device.kind == DerDevice::Kind::pv) {
        d.availability_w = profile_from_json(jd.at("availability_w"),
                                             "device '" + d.device.id + "' availability");
      } else {
        d.device.battery.dt_h = sc.tick_s / 3600.0;
        d.initial_soc_pct = jd.value("initial_soc_pct", 60.0);
      }
      d.gamma_down = jd.value("gamma_down", 0.95);
      sc.devices.push_back(std::move(d));
    }

    for (const json& js : j.at("services")) {
      GridService s;
      s.id = js.at("id").get<std::string>();
      const std::string kind = js.at("kind").get<std::string>();
      if (kind == "voltage") s.kind = ServiceKind::voltage;
      else if (kind == "vpp") s.kind = ServiceKind::vpp;
      else throw ConfigError("service '" + s.id + "': unknown kind '" + kind + "'");
      for (const json& jm : js.at("measurements")) {
        MeasurementSpec m;
        m.id = jm.at("id").get<std::string>();
        if (s.kind == ServiceKind::voltage) {
          m.kind = MeasurementKind::voltage_mag;
          m.bus = bus_index(sc.network, jm.at("bus"), "measurement '" + m.id + "'");
        } else if (jm.value("head", false)) {
          m.kind = MeasurementKind::head_active_power;
        } else {
          m.kind = MeasurementKind::subtree_active_power;
          m.bus = bus_index(sc.network, jm.at("subtree"), "measurement '" + m.id + "'");
        }
        s.measurements.push_back(m);
      }
      for (const json& jb : js.at("bounds")) {
        s.bounds.push_back(schedule_from_json(jb, s.kind, sc.network.base_power_w));
      }
      s.beta_init = js.at("beta_init").get<double>();
      s.gamma_down = js.at("gamma_down").get<double>();
      sc.services.push_back(std::move(s));
    }

    if (j.contains("loads")) {
      for (const json& jl : j.at("loads")) {
        const int b = bus_index(sc.network, jl.at("bus"), "load override");
        if (jl.contains("p_w")) sc.load_p_w[b] = profile_from_json(jl.at("p_w"), "load p");
        if (jl.contains("q_var")) sc.load_q_var[b] = profile_from_json(jl.at("q_var"), "load q");
      }
    }

    if (j.contains("params")) {
      const json& jp = j.at("params");
      sc.params.nu = jp.value("nu", sc.params.nu);
      sc.params.eps = jp.value("eps", sc.params.eps);
      sc.params.s_lower = jp.value("s_lower", sc.params.s_lower);
      sc.params.s_upper = jp.value("s_upper", sc.params.s_upper);
      sc.params.gamma_up = jp.value("gamma_up", sc.params.gamma_up);
    }
    sc.alpha_init = j.at("alpha_init").get<double>();
    if (j.contains("tap_events")) {
      for (const json& je : j.at("tap_events")) {
        sc.tap_events.push_back({je.at("t_s").get<double>(), je.at("tap_ratio").get<double>()});
      }
    }
    sc.rebuild_sensitivities_on_tap = j.value("rebuild_sensitivities_on_tap", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  try {
    sc.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return sc;
}

std::string dirname_of(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

}  // namespace

NetworkModel network_from_json_file(const std::string& path) {
  return network_from_json(load_json(path));
}

Scenario scenario_from_json_file(const std::string& path) {
  return scenario_from_json(load_json(path), dirname_of(path));
}

Scenario resolve_scenario(const std::string& name_or_path, RunMode mode, std::uint64_t seed) {
  const auto names = builtin_scenario_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_scenario(name_or_path, mode, seed);
  }
  Scenario sc = scenario_from_json_file(name_or_path);
  sc.mode = mode;
  sc.seed = seed;
  if (mode == RunMode::manual) sc.params.manual_mode = true;
  return sc;
}

Profile profile_from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open '" + path + "'");
  Profile p;
  std::string line;
  std::vector<double> times;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {  // header
      first = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("'" + path + "': malformed CSV row");
    times.push_back(std::stod(line.substr(0, comma)));
    p.values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (p.values.size() < 2) throw ConfigError("'" + path + "': need at least two samples");
  p.granularity_s = times[1] - times[0];
  if (!(p.granularity_s > 0.0)) throw ConfigError("'" + path + "': non-increasing timestamps");
  for (size_t i = 1; i < times.size(); ++i) {
    if (std::abs(times[i] - times[i - 1] - p.granularity_s) > 1e-6) {
      throw ConfigError("'" + path + "': samples must be evenly spaced");
    }
  }
  return p;
}

CentralInstance central_instance_from_json_file(const std::string& path) {
  const json j = load_json(path);
  CentralInstance inst;
  try {
    inst.s_base_w = j.at("s_base_w").get<double>();
    inst.nu = j.value("nu", 1e-3);
    inst.eps = j.value("eps", 1e-4);
    for (const json& jd : j.at("devices")) {
      DerDevice d;
      d.id = jd.at("id").get<std::string>();
      d.bus = 0;
      const std::string kind = jd.at("kind").get<std::string>();
      if (kind == "pv") {
        d.kind = DerDevice::Kind::pv;
        d.pv = PvParams::rated(jd.at("inverter_w").get<double>());
        inst.p_av_w.push_back(jd.at("p_av_w").get<double>());
        inst.soc_pct.push_back(0.0);
      } else {
        d.kind = DerDevice::Kind::battery;
        BatteryParams b;
        b.cap_wh = jd.at("capacity_wh").get<double>();
        b.p_charge_max_w = jd.at("charge_limit_w").get<double>();
        b.p_discharge_max_w = jd.at("discharge_limit_w").get<double>();
        b.soc_min_pct = jd.value("soc_min_pct", 10.0);
        b.soc_max_pct = jd.value("soc_max_pct", 90.0);
        b.soc_pref_pct = jd.value("soc_pref_pct", 60.0);
        b.dt_h = jd.at("dt_h").get<double>();
        d.battery = b;
        inst.p_av_w.push_back(0.0);
        inst.soc_pct.push_back(jd.at("soc_pct").get<double>());
      }
      inst.devices.push_back(std::move(d));
    }
    const auto g0 = j.at("g0_pu").get<std::vector<double>>();
    const auto lo = j.at("lower_pu").get<std::vector<double>>();
    const auto hi = j.at("upper_pu").get<std::vector<double>>();
    const auto dp = j.at("dg_dp").get<std::vector<std::vector<double>>>();
    const auto dq = j.at("dg_dq").get<std::vector<std::vector<double>>>();
    const auto nm = static_cast<Eigen::Index>(g0.size());
    const auto nd = static_cast<Eigen::Index>(inst.devices.size());
    inst.g0_pu.resize(nm);
    inst.lower_pu.resize(nm);
    inst.upper_pu.resize(nm);
    inst.dg_dp.resize(nm, nd);
    inst.dg_dq.resize(nm, nd);
    for (Eigen::Index r = 0; r < nm; ++r) {
      inst.g0_pu(r) = g0[r];
      inst.lower_pu(r) = lo[r];
      inst.upper_pu(r) = hi[r];
      for (Eigen::Index c = 0; c < nd; ++c) {
        inst.dg_dp(r, c) = dp.at(r).at(c);
        inst.dg_dq(r, c) = dq.at(r).at(c);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("oracle instance: ") + e.what());
  }
  try {
    inst.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("oracle instance: ") + e.what());
  }
  return inst;
}

void apply_override(Scenario& sc, const std::string& key, const std::string& value) {
  auto as_double = [&]() {
    try {
      return std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError("override '" + key + "': not a number: '" + value + "'");
    }
  };
  if (key == "alpha_init") sc.alpha_init = as_double();
  else if (key == "horizon_s") sc.horizon_s = as_double();
  else if (key == "tick_s") sc.tick_s = as_double();
  else if (key == "params.nu") sc.params.nu = as_double();
  else if (key == "params.eps") sc.params.eps = as_double();
  else if (key == "params.s_lower") sc.params.s_lower = as_double();
  else if (key == "params.s_upper") sc.params.s_upper = as_double();
  else if (key == "params.gamma_up") sc.params.gamma_up = as_double();
  else if (key == "network.tap_ratio") sc.network.tap_ratio = as_double();
  else if (key == "rebuild_sensitivities_on_tap") {
    sc.rebuild_sensitivities_on_tap = (value == "true" || value == "1");
  } else if (key == "gamma_down_der") {
    for (ScenarioDevice& d : sc.devices) d.gamma_down = as_double();
  } else if (key.rfind("device.", 0) == 0 || key.rfind("service.", 0) == 0) {
    const auto second = key.find('.', key.find('.') + 0);
    const auto third = key.find('.', second + 1);
    if (third == std::string::npos) throw ConfigError("override '" + key + "': unknown key");
    const std::string id = key.substr(second + 1, third - second - 1);
    const std::string field = key.substr(third + 1);
    if (key.rfind("device.", 0) == 0) {
      for (ScenarioDevice& d : sc.devices) {
        if (d.device.id == id) {
          if (field == "gamma_down") d.gamma_down = as_double();
          else throw ConfigError("override '" + key + "': unknown key");
          return;
        }
      }
      throw ConfigError("override '" + key + "': no device '" + id + "'");
    }
    for (GridService& s : sc.services) {
      if (s.id == id) {
        if (field == "gamma_down") s.gamma_down = as_double();
        else if (field == "beta_init") s.beta_init = as_double();
        else throw ConfigError("override '" + key + "': unknown key");
        return;
      }
    }
    throw ConfigError("override '" + key + "': no service '" + id + "'");
  } else {
    throw ConfigError("override '" + key + "': unknown key");
  }
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(const Trajectory& tr, double base_power_w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  const int nm = static_cast<int>(tr.measurement_ids.size());
  const int nk = static_cast<int>(tr.service_ids.size());
  const int nd = static_cast<int>(tr.device_ids.size());

  out << "t_s,tap";
  for (int j = 0; j < nm; ++j) {
    const std::string& id = tr.measurement_ids[j];
    out << ",g:" << id << ",lo:" << id << ",hi:" << id << ",dlo:" << id << ",dhi:" << id;
  }
  for (int k = 0; k < nk; ++k) {
    out << ",beta:" << tr.service_ids[k] << ",scos_d:" << tr.service_ids[k];
  }
  for (int i = 0; i < nd; ++i) {
    const std::string& id = tr.device_ids[i];
    out << ",p_w:" << id << ",q_var:" << id << ",alpha:" << id << ",scos_p:" << id
        << ",soc_pct:" << id << ",pav_w:" << id;
  }
  for (int i = 0; i < nd; ++i) {
    for (int k = 0; k < nk; ++k) {
      out << ",hp:" << tr.device_ids[i] << ":" << tr.service_ids[k] << ",hq:" << tr.device_ids[i]
          << ":" << tr.service_ids[k];
    }
  }
  out << "\n";

  for (Eigen::Index t = 0; t < tr.ticks(); ++t) {
    out << fmt(tr.t_s[t]) << "," << fmt(tr.tap[t]);
    for (int j = 0; j < nm; ++j) {
      // Power measurements are exported in SI; voltages stay in p.u.
      const double scale =
          tr.measurement_kinds[j] == MeasurementKind::voltage_mag ? 1.0 : base_power_w;
      out << "," << fmt(tr.g(t, j) * scale) << "," << fmt(tr.g_lower(t, j) * scale) << ","
          << fmt(tr.g_upper(t, j) * scale) << "," << fmt(tr.d_lower(t, j)) << ","
          << fmt(tr.d_upper(t, j));
    }
    for (int k = 0; k < nk; ++k) {
      out << "," << fmt(tr.beta(t, k)) << "," << fmt(tr.s_cos_dual(t, k));
    }
    for (int i = 0; i < nd; ++i) {
      out << "," << fmt(tr.p_w(t, i)) << "," << fmt(tr.q_var(t, i)) << "," << fmt(tr.alpha(t, i))
          << "," << fmt(tr.s_cos_primal(t, i)) << "," << fmt(tr.soc_pct(t, i)) << ","
          << fmt(tr.p_av_w(t, i));
    }
    for (int i = 0; i < nd; ++i) {
      for (int k = 0; k < nk; ++k) {
        out << "," << fmt(tr.hp(t, i * nk + k)) << "," << fmt(tr.hq(t, i * nk + k));
      }
    }
    out << "\n";
  }
  if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

RunReport make_report(const Scenario& sc, const Trajectory& tr, double runtime_s) {
  RunReport rep;
  rep.scenario_id = sc.id;
  rep.mode = sc.mode == RunMode::manual ? "manual" : "adaptive";
  rep.seed = sc.seed;
  rep.completed = tr.completed;
  rep.diagnostic = tr.diagnostic;
  rep.ticks = tr.ticks();
  rep.runtime_s = runtime_s;
  for (int k = 0; k < static_cast<int>(tr.service_ids.size()); ++k) {
    ServiceReport sr;
    sr.id = tr.service_ids[k];
    sr.metrics = violation_metrics(tr.service_block(tr.g, k), tr.service_block(tr.g_lower, k),
                                   tr.service_block(tr.g_upper, k), tr.tick_s);
    sr.final_beta = tr.ticks() > 0 ? tr.beta(tr.ticks() - 1, k) : 0.0;
    rep.services.push_back(sr);
  }
  for (int i = 0; i < static_cast<int>(tr.device_ids.size()); ++i) {
    rep.final_alpha[tr.device_ids[i]] = tr.ticks() > 0 ? tr.alpha(tr.ticks() - 1, i) : 0.0;
  }
  return rep;
}

namespace {

json report_to_json(const RunReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["scenario_id"] = r.scenario_id;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["completed"] = r.completed;
  j["diagnostic"] = r.diagnostic;
  j["ticks"] = r.ticks;
  j["runtime_s"] = r.runtime_s;
  j["services"] = json::array();
  for (const ServiceReport& s : r.services) {
    j["services"].push_back({{"id", s.id},
                             {"max_violation", s.metrics.max_violation},
                             {"integral_violation", s.metrics.integral_violation},
                             {"oscillation_count", s.metrics.oscillation_count},
                             {"final_beta", s.final_beta}});
  }
  j["final_alpha"] = r.final_alpha;
  j["trajectory_csv"] = r.trajectory_csv;
  j["summary_json"] = r.summary_json;
  return j;
}

}  // namespace

void write_report_json(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << report_to_json(report).dump(2) << "\n";
  if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

RunReport report_from_json_file(const std::string& path) {
  const json j = load_json(path);
  RunReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.completed = j.at("completed").get<bool>();
    r.diagnostic = j.value("diagnostic", "");
    r.ticks = j.at("ticks").get<long>();
    r.runtime_s = j.at("runtime_s").get<double>();
    for (const json& js : j.at("services")) {
      ServiceReport s;
      s.id = js.at("id").get<std::string>();
      s.metrics.max_violation = js.at("max_violation").get<double>();
      s.metrics.integral_violation = js.at("integral_violation").get<double>();
      s.metrics.oscillation_count = js.at("oscillation_count").get<long>();
      s.final_beta = js.at("final_beta").get<double>();
      r.services.push_back(s);
    }
    r.final_alpha = j.at("final_alpha").get<std::map<std::string, double>>();
    r.trajectory_csv = j.value("trajectory_csv", "");
    r.summary_json = j.value("summary_json", "");
  } catch (const json::exception& e) {
    throw ConfigError("report '" + path + "': " + e.what());
  }
  return r;
}

Comparison compare_reports(const RunReport& a, const RunReport& b) {
  if (a.scenario_id != b.scenario_id) {
    throw ConfigError("compare: reports describe different scenarios ('" + a.scenario_id +
                      "' vs '" + b.scenario_id + "')");
  }
  json j;
  j["scenario_id"] = a.scenario_id;
  j["a"] = {{"mode", a.mode}, {"seed", a.seed}};
  j["b"] = {{"mode", b.mode}, {"seed", b.seed}};
  j["services"] = json::array();

  std::ostringstream text;
  text << "scenario " << a.scenario_id << ": A=" << a.mode << " vs B=" << b.mode << "\n";
  text << "service              metric                A               B           A-B\n";
  for (const ServiceReport& sa : a.services) {
    const ServiceReport* sb = nullptr;
    for (const ServiceReport& s : b.services) {
      if (s.id == sa.id) sb = &s;
    }
    if (!sb) throw ConfigError("compare: service '" + sa.id + "' missing from report B");
    auto row = [&](const char* name, double va, double vb) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-20s %-16s %15.6g %15.6g %13.6g\n", sa.id.c_str(), name,
                    va, vb, va - vb);
      text << buf;
    };
    row("max_violation", sa.metrics.max_violation, sb->metrics.max_violation);
    row("integral_violation", sa.metrics.integral_violation, sb->metrics.integral_violation);
    row("oscillation_count", static_cast<double>(sa.metrics.oscillation_count),
        static_cast<double>(sb->metrics.oscillation_count));
    j["services"].push_back(
        {{"id", sa.id},
         {"a",
          {{"max_violation", sa.metrics.max_violation},
           {"integral_violation", sa.metrics.integral_violation},
           {"oscillation_count", sa.metrics.oscillation_count}}},
         {"b",
          {{"max_violation", sb->metrics.max_violation},
           {"integral_violation", sb->metrics.integral_violation},
           {"oscillation_count", sb->metrics.oscillation_count}}},
         {"delta",
          {{"max_violation", sa.metrics.max_violation - sb->metrics.max_violation},
           {"integral_violation",
            sa.metrics.integral_violation - sb->metrics.integral_violation},
           {"oscillation_count",
            sa.metrics.oscillation_count - sb->metrics.oscillation_count}}}});
  }
  return Comparison{text.str(), j.dump(2)};
}

}  // namespace derms
