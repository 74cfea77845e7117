import init, { tail_curve, bernstein_curve, rmm_experiment } from "./pkg/mtails_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function showError(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

// Draws series over a shared x axis; log scale on y when `logY`.
function plot(canvas, xs, series, { logY = false, logX = false, legend, yLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 48;
  ctx.clearRect(0, 0, W, H);
  const fy = logY ? Math.log10 : (v) => v;
  const fx = logX ? Math.log10 : (v) => v;
  const ys = series.flatMap((s) => s.values).filter((v) => Number.isFinite(v) && (!logY || v > 0)).map(fy);
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const [x0, x1] = [fx(xs[0]), fx(xs[xs.length - 1])];
  const px = (x) => pad + ((fx(x) - x0) / (x1 - x0 || 1)) * (W - 2 * pad);
  const py = (y) => H - pad - ((fy(y) - y0) / (y1 - y0 || 1)) * (H - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  const fmt = (v) => (logY ? `1e${v.toFixed(1)}` : v.toPrecision(3));
  ctx.fillText(fmt(y1), 4, pad + 4);
  ctx.fillText(fmt(y0), 4, H - pad);
  ctx.fillText(String(xs[0]), pad, H - pad + 16);
  ctx.fillText(String(xs[xs.length - 1]), W - pad - 24, H - pad + 16);
  ctx.fillText(yLabel, pad + 4, pad - 8);

  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.setLineDash(s.dash ?? []);
    ctx.lineWidth = 2;
    ctx.beginPath();
    let started = false;
    xs.forEach((x, j) => {
      const v = s.values[j];
      if (!Number.isFinite(v) || (logY && v <= 0)) return;
      started ? ctx.lineTo(px(x), py(v)) : ctx.moveTo(px(x), py(v));
      started = true;
    });
    ctx.stroke();
  });
  ctx.setLineDash([]);
  legend.innerHTML = series
    .map((s, i) => `<span style="color:${COLORS[i % COLORS.length]}">&#9644; ${s.name}</span>`)
    .join("");
}

function bindOutputs() {
  for (const input of document.querySelectorAll("input[type=range]")) {
    const o = input.parentElement.querySelector("output");
    const sync = () => (o.textContent = input.value);
    input.addEventListener("input", sync);
    sync();
  }
}

function drawTail() {
  const r = JSON.parse(tail_curve(0.05, num("tail-tmax"), 400));
  plot($("tail-plot"), r.t, [
    { name: "phi(t)", values: r.phi },
    { name: "exp(-t/2)", values: r.half_exp, dash: [6, 4] },
    { name: "exp(-t)", values: r.exp, dash: [2, 3] },
  ], { logY: true, legend: $("tail-legend") });
}

function drawBernstein() {
  const r = JSON.parse(bernstein_curve(num("bern-n"), num("bern-b"), num("bern-s"), num("bern-k"), 15, 300));
  plot($("bern-plot"), r.deviation.map((d) => +d.toPrecision(3)), [
    { name: "probability k phi(t)", values: r.probability },
    { name: "probability k exp(-t)", values: r.exp_probability, dash: [6, 4] },
  ], { logY: true, legend: $("bern-legend"), yLabel: "failure probability vs deviation" });
}

function drawRmm() {
  const r = JSON.parse(rmm_experiment(
    num("rmm-rows"), num("rmm-m"), num("rmm-decay"), 4000, num("rmm-runs"), Math.max(0, num("rmm-seed") | 0),
  ));
  plot($("rmm-plot"), r.n, [
    { name: "mean error", values: r.mean_error },
    { name: "worst error", values: r.max_error, dash: [2, 3] },
    { name: "precise certificate", values: r.precise },
    { name: "simplified certificate", values: r.simplified, dash: [6, 4] },
  ], { logY: true, logX: true, legend: $("rmm-legend"), yLabel: "relative spectral error vs samples" });
  $("rmm-info").textContent =
    `stable ranks ${r.stable_rank_a.toFixed(2)} and ${r.stable_rank_b.toFixed(2)}; ` +
    `${r.sample_size_eps_half} samples give relative error 0.5 with probability 0.9`;
}

function guard(f) {
  return () => {
    try {
      f();
      showError(null);
    } catch (e) {
      showError(e);
    }
  };
}

await init();
bindOutputs();
const wire = (ids, f, event = "input") => {
  const g = guard(f);
  ids.forEach((id) => $(id).addEventListener(event, g));
  g();
};
wire(["tail-tmax"], drawTail);
wire(["bern-n", "bern-b", "bern-s", "bern-k"], drawBernstein);
wire(["rmm-rows", "rmm-m", "rmm-decay", "rmm-runs", "rmm-seed"], drawRmm, "change");
