import init, { dimerDynamics, enaqtCurve, fitSuperOhmic } from "./pkg/excisim_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

// series: [{x, y, label}], opts.logx for a log-scaled abscissa
function plot(canvas, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 50, R = 10, T = 10, B = 30;
  ctx.clearRect(0, 0, W, H);
  const fx = opts.logx ? Math.log10 : (v) => v;
  const xs = series.flatMap((s) => s.x.map(fx));
  const ys = series.flatMap((s) => s.y);
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = Math.min(0, ...ys), y1 = Math.max(...ys) || 1;
  const px = (v) => L + ((fx(v) - x0) / (x1 - x0 || 1)) * (W - L - R);
  const py = (v) => H - B - ((v - y0) / (y1 - y0 || 1)) * (H - T - B);

  ctx.strokeStyle = "#888";
  ctx.strokeRect(L, T, W - L - R, H - T - B);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(3), 4, T + 10);
  ctx.fillText(y0.toPrecision(3), 4, H - B);
  const xl = opts.logx ? 10 ** x0 : x0, xr = opts.logx ? 10 ** x1 : x1;
  ctx.fillText(xl.toPrecision(3), L, H - 12);
  ctx.fillText(xr.toPrecision(3), W - R - 40, H - 12);
  if (opts.xlabel) ctx.fillText(opts.xlabel, W / 2 - 20, H - 12);

  series.forEach((s, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
    if (opts.markers) s.x.forEach((x, i) => ctx.fillRect(px(x) - 2, py(s.y[i]) - 2, 4, 4));
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.label, W - R - 120, T + 14 + 14 * k);
  });
}

function guarded(msg, f) {
  return () => {
    $(msg).classList.remove("err");
    try {
      const t0 = performance.now();
      const text = f();
      $(msg).textContent = `${text}\n(${(performance.now() - t0).toFixed(0)} ms)`;
    } catch (e) {
      $(msg).classList.add("err");
      $(msg).textContent = String(e.message ?? e);
    }
  };
}

const runDimer = guarded("d-msg", () => {
  const tmax = num("d-tmax");
  const r = JSON.parse(dimerDynamics(num("d-gap"), num("d-v"), num("d-gamma"), tmax, tmax / 400));
  plot($("d-plot"), [
    { x: r.times, y: r.p1, label: "P1" },
    { x: r.times, y: r.p2, label: "P2" },
    { x: r.times, y: r.coherence, label: "|rho12|" },
  ], { xlabel: "t (ps)" });
  return `final P1 = ${r.p1.at(-1).toFixed(4)}, P2 = ${r.p2.at(-1).toFixed(4)}`;
});

const runEnaqt = guarded("e-msg", () => {
  const sites = $("e-sites").value.split(",").map(Number);
  const r = JSON.parse(enaqtCurve(new Float64Array(sites), num("e-v"), num("e-k"), num("e-t"), 0.1, 3000, 25));
  plot($("e-plot"), [{ x: r.gamma, y: r.efficiency, label: "efficiency" }], { logx: true, markers: true, xlabel: "gamma (cm^-1)" });
  const best = r.efficiency.indexOf(Math.max(...r.efficiency));
  return `optimum gamma ~ ${r.gamma[best].toPrecision(3)} cm^-1, efficiency ${r.efficiency[best].toFixed(3)}`;
});

const runFit = guarded("f-msg", () => {
  const r = JSON.parse(fitSuperOhmic(num("f-lambda"), num("f-wc"), num("f-temp"), num("f-k"), num("f-max"), 256));
  plot($("f-plot"), [
    { x: r.grid, y: r.target, label: "C(omega, T)" },
    { x: r.grid, y: r.fitted, label: "oscillator sum" },
  ], { xlabel: "omega (cm^-1)" });
  const rows = r.oscillators.map((o) =>
    `${o.omega0.toFixed(1).padStart(9)} ${o.eta.toExponential(3).padStart(11)} ${o.kappa0.toFixed(1).padStart(9)} ${o.quality.toFixed(2).padStart(7)}`);
  return [`relative rms ${r.residual.toFixed(4)}, roll-off ${r.roll_off}`, "  omega0       eta      kappa0       Q", ...rows].join("\n");
});

await init();
$("d-run").onclick = runDimer;
$("e-run").onclick = runEnaqt;
$("f-run").onclick = runFit;
runDimer();
