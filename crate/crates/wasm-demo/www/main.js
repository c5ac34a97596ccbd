import init, { ou_flow, geodesic_to_reference, two_point } from "./pkg/poisson_transport_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function lines(canvas, series, labels) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const xs = series[0].x;
  const x0 = xs[0], x1 = xs[xs.length - 1];
  let lo = Infinity, hi = -Infinity;
  for (const s of series) for (const v of s.y) if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (hi === lo) hi = lo + 1;
  const px = (x) => pad + (x - x0) / (x1 - x0 || 1) * (w - 2 * pad);
  const py = (y) => h - pad - (y - lo) / (hi - lo) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(hi.toPrecision(3), 2, pad);
  ctx.fillText(lo.toPrecision(3), 2, h - pad);
  ctx.fillText(x1.toPrecision(3), w - pad - 10, h - 10);
  const colors = ["#1f77b4", "#d62728", "#2ca02c"];
  series.forEach((s, i) => {
    ctx.strokeStyle = colors[i % colors.length];
    ctx.beginPath();
    let started = false;
    s.y.forEach((v, j) => {
      if (!Number.isFinite(v)) { started = false; return; }
      const X = px(s.x[j]), Y = py(v);
      if (started) ctx.lineTo(X, Y); else { ctx.moveTo(X, Y); started = true; }
    });
    ctx.stroke();
    ctx.fillStyle = colors[i % colors.length];
    ctx.fillText(labels[i], pad + 10 + 90 * i, pad - 8);
  });
}

function guard(out, f) {
  try { out.classList.remove("err"); f(); }
  catch (e) { out.classList.add("err"); out.textContent = String(e); }
}

function runFlow() {
  guard($("f-out"), () => {
    const r = JSON.parse(ou_flow(num("f-m"), num("f-cap"), num("f-start"), num("f-T"), num("f-K")));
    const fisher = r.fisher.map((v) => (v === null ? Infinity : v));
    lines($("f-plot"), [{ x: r.times, y: r.entropy }, { x: r.times, y: fisher }], ["H", "I"]);
    const k = r.times.length - 1;
    $("f-out").textContent = `H(0) = ${r.entropy[0].toFixed(6)}   H(T) = ${r.entropy[k].toExponential(4)}   ` +
      `H(T)/H(0) = ${(r.entropy[k] / r.entropy[0]).toExponential(4)}   e^-T = ${Math.exp(-r.times[k]).toExponential(4)}`;
  });
}

function runGeo() {
  guard($("g-out"), () => {
    const r = JSON.parse(geodesic_to_reference(num("g-m"), num("g-cap"), num("g-seed"), num("g-a"), num("g-K")));
    const mid = r.times.slice(0, -1).map((t, k) => 0.5 * (t + r.times[k + 1]));
    lines($("g-plot"), [{ x: r.times, y: r.entropy }, { x: mid, y: r.speed }], ["H along path", "speed"]);
    $("g-out").textContent = `W = ${r.distance.toPrecision(10)}   length = ${r.length.toPrecision(10)}   status ${r.status}`;
  });
}

function runTwo() {
  guard($("t-out"), () => {
    const r = JSON.parse(two_point(num("t-m"), num("t-b0"), num("t-b1"), num("t-K")));
    $("t-out").textContent = `solver W = ${r.solver.toPrecision(12)}\noracle W = ${r.oracle.toPrecision(12)}\n` +
      `relative error = ${r.relative_error.toExponential(3)}   status ${r.status}`;
  });
}

await init();
$("f-run").onclick = runFlow;
$("g-run").onclick = runGeo;
$("t-run").onclick = runTwo;
runFlow();
runTwo();
