"""Scenario commands.  Each returns ``{filename: text}``; nothing touches disk here."""

import csv
import io
import json

import numpy as np

from .. import estimation, gaussian, network, transduction
from .config import ConfigError, UnsupportedCommandError

SQL_STD = np.sqrt(gaussian.VACUUM_VARIANCE)


def _db(x):
    return None if x is None or not np.isfinite(x) else round(float(x), 2) + 0.0


def _db_text(x):
    return f"{_db(x):.2f}"


def _num(x):
    if x is None or (isinstance(x, float) and not np.isfinite(x)):
        return ""
    return repr(float(x))


def _csv(config, header, rows):
    buf = io.StringIO()
    buf.write(f"# config_sha256={config.sha256()} command={config.command} name={config.name}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _json(config, payload):
    payload = {"config_sha256": config.sha256(), "command": config.command, "name": config.name} | payload
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _child_seeds(seed, n):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _displacements(config, task):
    if task.picture != "displacement":
        return None
    d = (config.scene or {}).get("displacements")
    if d is None:
        raise ConfigError("displacement-picture tasks need scene.displacements")
    return np.asarray(d, dtype=float)


def _report_dict(report):
    d = report.to_dict()
    d["db_below_sql"] = _db(report.db_below_sql)
    d["mc_db_below_sql"] = _db(report.mc_db_below_sql)
    return d


# trace -----------------------------------------------------------------------


def cmd_trace(config):
    """Single-sensor homodyne traces in SQL units, plus an optional phase sweep."""
    source = config.resolve_source()
    task = estimation.SensingTask((1.0,), target="custom", parameter="phase")
    circuit = config.resolve_circuit(task, source.ideal_squeezing_db)
    if circuit.num_sensors != 1:
        raise UnsupportedCommandError("trace needs a single-sensor circuit")
    c = network.amplitudes_from_circuit(circuit)
    spec = config.trace or {}
    n = int(spec.get("n_samples", config.n_shots))
    if "phases_over_pi" in spec:
        phases = np.pi * np.asarray(spec["phases_over_pi"], dtype=float)
    else:
        phases = np.asarray(spec.get("phases", [0.54 * np.pi, 1.32 * np.pi]), dtype=float)
    base_scene = config.resolve_scene(task)
    probe = network.prepare_network_state(source.r, circuit)
    sweep = spec.get("phase_sweep")
    sweep_values = []
    if sweep:
        sweep_values = np.linspace(0.0, 2 * np.pi, int(sweep.get("n_points", 24)), endpoint=False)
        if "values" in sweep:
            sweep_values = np.asarray(sweep["values"], dtype=float)
    seeds = _child_seeds(config.seed, 1 + len(phases) + len(sweep_values))
    hd = [gaussian.HomodyneSpec(0)]

    def trace_at(phi, seed, n_samples):
        scene = base_scene.with_phases((phi,))
        state = gaussian.displace(probe, 0, 0.0, transduction.displacement_from_rf(scene, c, 0))
        mean, var = gaussian.homodyne_stats(state, hd[0])
        samples = gaussian.homodyne_sample(state, hd, n_samples, seed)[:, 0] / SQL_STD
        return samples, mean / SQL_STD, np.sqrt(var) / SQL_STD

    sql = gaussian.homodyne_sample(gaussian.vacuum(1), hd, n, seeds[0])[:, 0] / SQL_STD
    columns = [sql]
    summary = [{"label": "sql", "sample_std": float(sql.std(ddof=1)), "theory_std": 1.0}]
    for phi, seed in zip(phases, seeds[1:]):
        samples, mean, std = trace_at(phi, seed, n)
        columns.append(samples)
        summary.append(
            {
                "label": f"phi={phi / np.pi:.4g}pi",
                "phase": float(phi),
                "sample_mean": float(samples.mean()),
                "sample_std": float(samples.std(ddof=1)),
                "theory_mean": float(mean),
                "theory_std": float(std),
                "noise_db_below_sql": _db(-20 * np.log10(samples.std(ddof=1))),
            }
        )
    header = ["sample", "sql"] + [f"phi_{phi / np.pi:.4g}pi" for phi in phases]
    rows = [[i] + [_num(col[i]) for col in columns] for i in range(n)]
    out = {"trace.csv": _csv(config, header, rows)}

    if sweep:
        m_s = int(sweep.get("n_samples", n))
        sweep_rows = []
        for phi, seed in zip(sweep_values, seeds[1 + len(phases):]):
            samples, mean, std = trace_at(phi, seed, m_s)
            sweep_rows.append([_num(phi), _num(samples.mean()), _num(samples.std(ddof=1)), _num(mean), _num(std)])
        out["phase_sweep.csv"] = _csv(
            config, ["phase", "mean_sql", "std_sql", "theory_mean_sql", "theory_std_sql"], sweep_rows
        )
    out["trace_summary.json"] = _json(config, {"traces": summary, "ideal_squeezing_db": _db(source.ideal_squeezing_db)})
    return out


# task ------------------------------------------------------------------------


def _task_points(config, task, scene):
    """Scenes (or displacement vectors) along the configured parameter sweep."""
    spec = config.sweep
    if not spec:
        return [None], [scene]
    values = np.asarray(spec["values"], dtype=float)
    sensors = list(spec.get("sensors", [0]))
    quantity = spec.get("quantity", task.parameter or "displacement")
    points = []
    for v in values:
        if task.picture == "displacement":
            d = _displacements(config, task).copy()
            d[sensors] = v
            points.append(d)
        elif quantity == "amplitude":
            amps = np.array(scene.amplitudes)
            amps[sensors] = v
            points.append(scene.with_amplitudes(amps))
        elif quantity == "phase":
            phases = np.array(scene.phases)
            phases[sensors] = v
            points.append(scene.with_phases(phases))
        else:
            raise ConfigError(f"unknown sweep quantity {quantity!r}")
    return list(values), points


def cmd_task(config):
    """Entangled and classical-separable Monte Carlo runs side by side."""
    source = config.resolve_source()
    task = config.resolve_task()
    circuit = config.resolve_circuit(task, source.ideal_squeezing_db)
    if circuit.num_sensors != task.num_sensors:
        raise ConfigError("circuit and task disagree on the number of sensors")
    scene = config.resolve_scene(task)
    values, points = _task_points(config, task, scene)
    seeds = _child_seeds(config.seed, 2 * len(points))
    rows, quantum, classical = [], [], []
    for k, (value, point) in enumerate(zip(values, points)):
        kwargs = {"displacements": point} if task.picture == "displacement" else {"scene": point}
        if task.picture == "displacement" and point is None:
            kwargs = {"displacements": _displacements(config, task)}
        q = estimation.run_task_monte_carlo(task, circuit, source.r, config.n_shots, seeds[2 * k], **kwargs)
        cl = estimation.run_task_monte_carlo(task, circuit, 0.0, config.n_shots, seeds[2 * k + 1], **kwargs)
        quantum.append(_report_dict(q))
        classical.append(_report_dict(cl))
        rows.append(
            [
                _num(value),
                _num(q.truth),
                _num(q.estimate),
                _num(q.estimate_se),
                _num(cl.estimate),
                _num(cl.estimate_se),
                _num(q.analytic_variance / q.sql_variance),
                _num(q.mc_variance / q.sql_variance),
                _num(cl.analytic_variance / cl.sql_variance),
                _num(cl.mc_variance / cl.sql_variance),
                _db_text(q.db_below_sql),
                _db_text(cl.db_below_sql),
            ]
        )
    header = [
        "value",
        "truth",
        "estimate_quantum",
        "se_quantum",
        "estimate_classical",
        "se_classical",
        "var_quantum_sql",
        "mc_var_quantum_sql",
        "var_classical_sql",
        "mc_var_classical_sql",
        "db_quantum",
        "db_classical",
    ]
    payload = {
        "task": task.to_dict(),
        "circuit": circuit.to_dict(),
        "ideal_squeezing_db": _db(source.ideal_squeezing_db),
        "entangled": quantum,
        "classical": classical,
        "summary": {
            "db_below_sql_quantum": _db(np.mean([q["mc_db_below_sql"] for q in quantum])),
            "db_below_sql_classical": _db(np.mean([c["mc_db_below_sql"] for c in classical])),
            "analytic_db_below_sql_quantum": quantum[0]["db_below_sql"],
            "analytic_db_below_sql_classical": classical[0]["db_below_sql"],
        },
    }
    return {"report.json": _json(config, payload), "task_sweep.csv": _csv(config, header, rows)}


# sweep -----------------------------------------------------------------------


def _sweep_values(spec):
    if "values" in spec:
        return [float(v) for v in spec["values"]]
    rng = spec.get("range", {"start": -1.0, "stop": 1.0, "num": 41})
    return [float(v) for v in np.round(np.linspace(rng["start"], rng["stop"], int(rng["num"])), 12)]


def cmd_sweep(config):
    """Variance against signed transmissivity of one VBS."""
    source = config.resolve_source()
    task = config.resolve_task()
    circuit = config.resolve_circuit(task, source.ideal_squeezing_db)
    scene = config.resolve_scene(task)
    spec = config.sweep or {}
    args = (
        task,
        circuit,
        int(spec.get("vbs_index", 1)),
        _sweep_values(spec),
    )
    mode = spec.get("mode", "flip-g")
    flip = spec.get("flip_sensor")
    points = estimation.sweep_transmissivity(*args, source.r, mode, flip, scene)
    mc = bool(spec.get("monte_carlo"))
    header = ["signed_T", "var_quantum_sql", "var_classical_sql", "db_quantum", "db_classical"]
    if mc:
        header += ["mc_var_quantum_sql", "mc_var_classical_sql"]
        settings = list(estimation.sweep_settings(*args, mode, flip, scene))
        seeds = _child_seeds(config.seed, 2 * len(settings))
    rows = []
    for k, p in enumerate(points):
        q, cl = p.var_quantum / p.sql, p.var_classical / p.sql
        row = [
            _num(p.signed_transmissivity),
            _num(q),
            _num(cl),
            "" if p.is_gap else _db_text(-10 * np.log10(q)),
            "" if p.is_gap else _db_text(-10 * np.log10(cl)),
        ]
        if mc:
            if p.is_gap:
                row += ["", ""]
            else:
                _, t, circ, sc = settings[k]
                rq = estimation.run_task_monte_carlo(t, circ, source.r, config.n_shots, seeds[2 * k], scene=sc)
                rc = estimation.run_task_monte_carlo(t, circ, 0.0, config.n_shots, seeds[2 * k + 1], scene=sc)
                row += [_num(rq.mc_variance / rq.sql_variance), _num(rc.mc_variance / rc.sql_variance)]
        rows.append(row)

    valid = [p for p in points if not p.is_gap]
    pos = [p for p in valid if p.signed_transmissivity > 0]
    neg = [p for p in valid if p.signed_transmissivity < 0]
    summary = {}
    if pos and neg:
        best_pos = min(pos, key=lambda p: p.var_quantum)
        best_neg = min(neg, key=lambda p: p.var_quantum)
        summary = {
            "quantum_min_positive": {"T": best_pos.signed_transmissivity, "var_sql": best_pos.var_quantum / best_pos.sql},
            "quantum_min_negative": {"T": best_neg.signed_transmissivity, "var_sql": best_neg.var_quantum / best_neg.sql},
            "classical_min_T": min(valid, key=lambda p: (p.var_classical, -p.signed_transmissivity)).signed_transmissivity,
            "quantum_branch_ratio": best_neg.var_quantum / best_pos.var_quantum,
        }
    return {"sweep.csv": _csv(config, header, rows), "sweep_summary.json": _json(config, summary)}


# scaling ---------------------------------------------------------------------


def cmd_scaling(config):
    """Variance against number of sensors at fixed photons per sensor."""
    spec = config.scaling or {}
    if "num_sensors" in spec:
        ms = [int(m) for m in spec["num_sensors"]]
    else:
        ms = list(range(1, int(spec.get("max_sensors", 16)) + 1))
    n_s = float(spec.get("photons_per_sensor", 10.0))
    etas = [float(e) for e in spec.get("efficiencies", [1.0])]
    large_from = int(spec.get("large_m_from", max(ms) // 2))
    rows, fits = [], []
    for eta in etas:
        ent, sep = estimation.scaling_curve(ms, n_s, eta)
        for m, a, b in zip(ms, ent, sep):
            rows.append([m, _num(eta), _num(a), _num(b)])
        big = [i for i, m in enumerate(ms) if m >= large_from]
        fits.append(
            {
                "efficiency": eta,
                "slope_entangled": estimation.loglog_slope(ms, ent),
                "slope_entangled_large_m": estimation.loglog_slope(np.array(ms)[big], ent[big]),
                "slope_separable": estimation.loglog_slope(ms, sep),
            }
        )
    return {
        "scaling.csv": _csv(config, ["num_sensors", "efficiency", "var_entangled", "var_separable"], rows),
        "scaling.json": _json(config, {"photons_per_sensor": n_s, "fits": fits}),
    }


# infer -----------------------------------------------------------------------


def cmd_infer(config):
    """Ideal squeezing, source and overall efficiency, and photon number from measured levels."""
    src = transduction.infer_source(config.source["squeezing_db"], config.source["antisqueezing_db"])
    payload = {
        "ideal_squeezing_db": _db(src.ideal_squeezing_db),
        "source_efficiency": round(src.source_efficiency, 4) if not src.degenerate else None,
        "degenerate": src.degenerate,
        "mean_photons": round(transduction.mean_photon_from_db(src.ideal_squeezing_db), 4),
    }
    network_db = (config.infer or {}).get("network_squeezing_db")
    if network_db is not None:
        payload["overall_efficiency"] = round(
            transduction.efficiency_from_network_squeezing(src.ideal_squeezing_db, network_db), 4
        )
    return {"infer.json": _json(config, payload)}


# synth -----------------------------------------------------------------------


def cmd_synth(config):
    """VBS chain and sign settings that realise the task's optimal network."""
    task = config.resolve_task()
    circuit = config.resolve_circuit(task)
    c = network.amplitudes_from_circuit(circuit)
    payload = {
        "task": task.to_dict(),
        "circuit": circuit.to_dict(),
        "amplitudes": c.tolist(),
        "power_split": (c**2).tolist(),
        "delay_signs": network.optimal_delay_signs(task).tolist() if task.picture == "rf-parameter" else None,
    }
    return {"synth.json": _json(config, payload)}


COMMAND_FUNCTIONS = {
    "trace": cmd_trace,
    "task": cmd_task,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "infer": cmd_infer,
    "synth": cmd_synth,
}


def run_config(config):
    return COMMAND_FUNCTIONS[config.command](config)
