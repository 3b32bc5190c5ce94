import init, { extremal_curve, mu_scaling, gpe_run } from "./pkg/degenflow_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

// series: [{xs, ys, color}]; log axes are applied by the caller
function plot(canvas, series, labels) {
  const g = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 36;
  g.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.xs);
  const ys = series.flatMap((s) => s.ys).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 - y0 < 1e-12) { y0 -= 1; y1 += 1; }
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0)) * (h - 2 * pad);
  g.strokeStyle = "#999";
  g.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  g.fillStyle = "#444";
  g.font = "11px sans-serif";
  g.fillText(y1.toPrecision(3), 2, pad + 4);
  g.fillText(y0.toPrecision(3), 2, h - pad);
  g.fillText(x0.toPrecision(3), pad, h - pad + 14);
  g.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 14);
  series.forEach((s, i) => {
    g.strokeStyle = s.color;
    g.beginPath();
    s.xs.forEach((x, k) => (k ? g.lineTo(sx(x), sy(s.ys[k])) : g.moveTo(sx(x), sy(s.ys[k]))));
    g.stroke();
    if (labels) {
      g.fillStyle = s.color;
      g.fillText(labels[i], w - pad - 140, pad + 14 + 13 * i);
    }
  });
}

function guard(outId, fn) {
  const out = $(outId);
  out.classList.remove("err");
  try {
    fn(out);
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

function runExtremal() {
  guard("ex-out", (out) => {
    const r = JSON.parse(extremal_curve(num("ex-a"), num("ex-b")));
    plot($("ex-plot"), [
      { xs: r.t, ys: r.control.map((c) => c[0]), color: "#1f77b4" },
      { xs: r.t, ys: r.control.map((c) => c[1]), color: "#ff7f0e" },
      { xs: r.t, ys: r.omega.map((c) => c[1]), color: "#2ca02c" },
      { xs: r.t, ys: r.eta, color: "#d62728" },
    ], ["c1", "c2", "ω2", "η"]);
    out.textContent =
      `μ = ${r.mu.toPrecision(12)}   window = ${r.window}   ` +
      `certified: ${r.certified} (worst residual ${r.worst_residual.toExponential(2)})`;
  });
}

function runScaling() {
  guard("sc-out", (out) => {
    const r = JSON.parse(mu_scaling(num("sc-a"), num("sc-lo"), num("sc-hi"), 40));
    const lb = r.rows.map((p) => Math.log10(p.b));
    plot($("sc-plot"), [
      { xs: lb, ys: r.rows.map((p) => Math.log10(p.mu)), color: "#1f77b4" },
      { xs: lb, ys: r.rows.map((p) => Math.log10(p.scaled)), color: "#9467bd" },
    ], ["log10 μ", "log10 μ b²/a"]);
    const s = r.rows.map((p) => p.scaled);
    out.textContent =
      `μ b²/a ranges over [${Math.min(...s).toPrecision(4)}, ${Math.max(...s).toPrecision(4)}]`;
  });
}

function runGpe() {
  guard("gpe-out", (out) => {
    const conv = document.querySelector("input[name=gpe]:checked").value === "conv";
    const r = JSON.parse(gpe_run(conv, Math.max(1, Math.round(num("gpe-len")))));
    const tau = r.rows.map((p) => p.tau);
    plot($("gpe-plot"), [
      { xs: tau, ys: r.rows.map((p) => Math.log10(p.norm)), color: "#1f77b4" },
      { xs: tau, ys: r.rows.map((p) => Math.log10(p.predicted_norm)), color: "#ff7f0e" },
    ], ["log10 |x|", "log10 exp(-Σμ)"]);
    const last = r.rows[r.rows.length - 1];
    out.textContent =
      `verdict: ${r.verdict}   final |x| = ${last.norm.toExponential(4)}   ` +
      `max rel. deviation ${r.max_rel_dev.toExponential(2)}`;
  });
}

await init();
$("status").textContent = "ready";
$("ex-run").onclick = runExtremal;
$("sc-run").onclick = runScaling;
$("gpe-run").onclick = runGpe;
runExtremal();
runScaling();
runGpe();
