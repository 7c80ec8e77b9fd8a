import init, { simulateFbm, simulateRosenblatt, fbmMse } from "./pkg/longmem_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const out = $("out");

function params() {
  return [num("h"), num("n"), num("alpha"), num("a"), num("seed")];
}

function show(text, error = false) {
  out.textContent = text;
  out.className = error ? "err" : "";
}

function plot(sample, a) {
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  const t = sample.times, y = sample.observations, z = sample.noise;
  const all = [...y, ...z, ...t.map((s) => a * s)];
  const lo = Math.min(...all), hi = Math.max(...all);
  const pad = 20, w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  const tmax = t[t.length - 1];
  const px = (s) => pad + (w * s) / tmax;
  const py = (v) => pad + h - (h * (v - lo)) / (hi - lo || 1);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const line = (xs, ys, color) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    xs.forEach((s, i) => (i ? ctx.lineTo(px(s), py(ys[i])) : ctx.moveTo(px(s), py(ys[i]))));
    ctx.stroke();
  };
  line(t, z, "#999");
  line(t, y, "#1f5fbf");
  line([0, tmax], [0, a * tmax], "#c33");
}

function run(label, simulate) {
  const [h, n, alpha, a, seed] = params();
  try {
    const start = performance.now();
    const s = simulate(h, n, alpha, a, seed);
    const ms = (performance.now() - start).toFixed(0);
    plot(s, a);
    let text = `${label}: M = ${s.times.length - 1}, a = ${a}, estimate = ${s.a_hat.toFixed(6)}`;
    if (!Number.isNaN(s.envelope)) text += `\nerror envelope = ${s.envelope.toExponential(3)}`;
    text += `\n(${ms} ms; grey: noise, blue: observations, red: true trend)`;
    show(text);
    s.free();
  } catch (e) {
    show(String(e.message ?? e), true);
  }
}

await init();
$("fbm").onclick = () => run("fBm", simulateFbm);
$("walk").onclick = () => run("Rosenblatt walk", simulateRosenblatt);
$("mse").onclick = () => {
  const [h, n, alpha] = params();
  try {
    show(`exact fBm MSE at H = ${h}, N = ${n}, alpha = ${alpha}: ${fbmMse(h, n, alpha).toExponential(4)}`);
  } catch (e) {
    show(String(e.message ?? e), true);
  }
};
