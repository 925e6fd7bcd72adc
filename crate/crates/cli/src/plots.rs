//! Standalone matplotlib scripts written next to the results they read.
//! Each script saves `<kind>.png` beside itself.

use crate::config::ExperimentKind;

const PRELUDE: &str = r##"import json
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

HERE = Path(__file__).resolve().parent


def load_table(name):
    path = HERE / name
    with open(path) as f:
        header = f.readline().lstrip("#").split()
    data = np.atleast_2d(np.loadtxt(path, comments="#"))
    return {h: data[:, i] for i, h in enumerate(header)}


def load_result(name):
    with open(HERE / name) as f:
        return json.load(f)["result"]

"##;

fn body(kind: ExperimentKind) -> Option<&'static str> {
    Some(match kind {
        ExperimentKind::PacketInfo => {
            r#"t = load_table("packet-info.amplitudes.dat")
w = t["re_alpha"] ** 2 + t["im_alpha"] ** 2
fig, ax = plt.subplots()
if "k_y" in t:
    k = np.sqrt(t["k_x"] ** 2 + t["k_y"] ** 2 + t["k_z"] ** 2)
    ax.hist(k, bins=80, weights=w)
    ax.set_xlabel("|k|")
else:
    ax.plot(t["k_x"], w)
    ax.set_xlabel("k")
ax.set_ylabel("|alpha|^2")
"#
        }
        ExperimentKind::EvolveFree | ExperimentKind::EvolveKg | ExperimentKind::EvolveSchrodinger => {
            r#"t = load_table(KIND + ".series.dat")
fig, ax = plt.subplots()
for name in ("norm_drift", "charge_drift", "dP0", "dP1"):
    ax.plot(t["t"], t[name], label=name)
ax.set_xlabel("t")
ax.legend()
"#
        }
        ExperimentKind::CompareLowEnergy => {
            r#"t = load_table("compare-low-energy.series.dat")
fig, ax = plt.subplots()
ax.semilogy(t["t"][1:], t["discrepancy"][1:])
ax.set_xlabel("t")
ax.set_ylabel("phase-aligned L2 discrepancy")
"#
        }
        ExperimentKind::GaugeAudit => {
            r#"r = load_result("gauge-audit.json")
names = list(r["invariance"]) + ["covariant_derivative", "pure_gauge_curvature"]
values = [r["invariance"][n] for n in r["invariance"]] + [r["covariant_derivative"], r["pure_gauge_curvature"]]
fig, ax = plt.subplots()
ax.bar(names, np.maximum(values, 1e-18))
ax.axhline(r["tolerance"], color="k", ls="--")
ax.set_yscale("log")
ax.tick_params(axis="x", rotation=30)
"#
        }
        ExperimentKind::BornTrials => {
            r#"v = load_result("born-trials.json")["verdict"]
check = v["retry"] or v["first"]
p = np.array(check["probabilities"])
f = np.array(check["frequencies"])
n = np.arange(len(p))
err = 4 * np.sqrt(p * (1 - p) / check["trials"])
fig, ax = plt.subplots()
ax.bar(n, p, color="0.8", label="p(n)")
ax.errorbar(n, f, yerr=err, fmt="o", label="frequency")
ax.set_xlabel("bin")
ax.legend()
"#
        }
        ExperimentKind::DetectionForce => {
            r#"s = load_result("detection-force.json")["summary"]
mu = np.arange(4)
fig, ax = plt.subplots()
ax.errorbar(mu, s["mean_delta"], yerr=4 * np.array(s["stderr"]), fmt="o", label="Monte Carlo")
ax.plot(mu, s["exact_mean_delta"], "x", label="exact")
ax.set_xticks(mu)
ax.set_xlabel("component")
ax.set_ylabel("mean detection force")
ax.legend()
"#
        }
        ExperimentKind::FullSuite => return None,
    })
}

pub fn script(kind: ExperimentKind) -> Option<String> {
    let body = body(kind)?;
    Some(format!(
        "{PRELUDE}KIND = \"{kind}\"\n{body}fig.tight_layout()\nout = HERE / (KIND + \".png\")\nfig.savefig(out)\nprint(out, file=sys.stderr)\n"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_experiment_has_a_script() {
        for kind in ExperimentKind::SUITE {
            let s = script(kind).unwrap();
            assert!(s.contains(&format!("KIND = \"{kind}\"")));
        }
        assert!(script(ExperimentKind::FullSuite).is_none());
    }
}
