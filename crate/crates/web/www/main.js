// Browser front end. Build the bindings into ./pkg first (see README).
import init, { current_trace, backflow_summary, wigner_grid } from "./pkg/backflow_web.js";

const ids = ["alpha", "delta", "p0", "theta", "s", "t"];
const el = Object.fromEntries(ids.map((k) => [k, document.getElementById(k)]));

function values() {
  return Object.fromEntries(ids.map((k) => [k, parseFloat(el[k].value)]));
}

function showValues() {
  for (const k of ids) {
    document.querySelector(`output[for=${k}]`).textContent = Number(el[k].value).toFixed(k === "s" ? 4 : 3);
  }
}

function drawCurrent(v, summary) {
  const c = document.getElementById("current");
  const g = c.getContext("2d");
  const data = current_trace(v.p0, v.delta, v.alpha, v.theta, v.s, 1200);
  const n = data.length / 2;
  const ts = data.subarray(0, n);
  const js = data.subarray(n);
  let lo = Infinity, hi = -Infinity;
  for (const j of js) { lo = Math.min(lo, j); hi = Math.max(hi, j); }
  lo = Math.min(lo, 0);
  const pad = 0.05 * (hi - lo || 1);
  lo -= pad; hi += pad;
  const sx = (t) => ((t - ts[0]) / (ts[n - 1] - ts[0])) * c.width;
  const sy = (j) => c.height - ((j - lo) / (hi - lo)) * c.height;

  g.clearRect(0, 0, c.width, c.height);
  const [beta, t1, t2] = summary;
  if (beta > 0 && t2 > t1) {
    g.fillStyle = "rgba(214, 39, 40, 0.18)";
    g.fillRect(sx(t1), 0, sx(t2) - sx(t1), c.height);
  }
  g.strokeStyle = "#888";
  g.setLineDash([2, 3]);
  g.beginPath(); g.moveTo(0, sy(0)); g.lineTo(c.width, sy(0)); g.stroke();
  g.setLineDash([]);
  g.strokeStyle = "#1f77b4";
  g.beginPath();
  for (let i = 0; i < n; i++) {
    const x = sx(ts[i]), y = sy(js[i]);
    i === 0 ? g.moveTo(x, y) : g.lineTo(x, y);
  }
  g.stroke();
  g.fillStyle = "#000";
  g.fillText(`t in [${ts[0].toFixed(2)}, ${ts[n - 1].toFixed(2)}]`, 6, 14);
}

function drawWigner(v, summary) {
  const c = document.getElementById("wigner");
  const g = c.getContext("2d");
  const nx = 230, np = 150;
  const data = wigner_grid(v.p0, v.delta, v.alpha, v.theta, v.s, v.t, nx, np);
  const [x0, x1, p0, p1] = data;
  const w = data.subarray(6);
  let lim = 0;
  for (const x of w) lim = Math.max(lim, Math.abs(x));
  const img = g.createImageData(nx, np);
  for (let i = 0; i < nx; i++) {
    for (let j = 0; j < np; j++) {
      const u = lim > 0 ? w[i * np + j] / lim : 0;
      const k = 4 * ((np - 1 - j) * nx + i);
      const a = Math.min(1, Math.abs(u));
      img.data[k] = u >= 0 ? 255 : 255 * (1 - a);
      img.data[k + 1] = 255 * (1 - a);
      img.data[k + 2] = u >= 0 ? 255 * (1 - a) : 255;
      img.data[k + 3] = 255;
    }
  }
  const off = new OffscreenCanvas(nx, np);
  off.getContext("2d").putImageData(img, 0, 0);
  g.imageSmoothingEnabled = false;
  g.drawImage(off, 0, 0, c.width, c.height);

  // Backflow sector between p = -x / t1 and p = -x / t2, p >= 0.
  const [beta, t1, t2] = summary;
  if (beta > 0 && t2 > t1) {
    const sx = (x) => ((x - x0) / (x1 - x0)) * c.width;
    const sy = (p) => c.height - ((p - p0) / (p1 - p0)) * c.height;
    g.setLineDash([5, 3]);
    g.strokeStyle = "#000";
    g.fillStyle = "rgba(0, 0, 0, 0.15)";
    g.beginPath();
    g.moveTo(sx(0), sy(0));
    g.lineTo(sx(-p1 * t1), sy(p1));
    g.lineTo(sx(-p1 * t2), sy(p1));
    g.closePath();
    g.fill();
    g.stroke();
    g.setLineDash([]);
  }
}

function update() {
  showValues();
  const v = values();
  const err = document.getElementById("error");
  try {
    const summary = backflow_summary(v.p0, v.delta, v.alpha, v.theta, v.s);
    const [beta, t1, t2, delta] = summary;
    const threshold = 1 + v.delta / v.p0;
    document.getElementById("summary").textContent =
      `beta = ${beta.toFixed(6)}   interval [${t1.toFixed(4)}, ${t2.toFixed(4)}]\n` +
      `Delta = ${delta.toFixed(5)}   beta <= Delta: ${beta <= delta}` +
      (Math.abs(v.theta - Math.PI) < 0.02 ? `   sudden death above alpha = ${threshold.toFixed(3)}` : "");
    drawCurrent(v, summary);
    drawWigner(v, summary);
    err.textContent = "";
  } catch (e) {
    err.textContent = String(e);
  }
}

let pending = false;
function schedule() {
  if (pending) return;
  pending = true;
  requestAnimationFrame(() => { pending = false; update(); });
}

await init();
for (const k of ids) el[k].addEventListener("input", schedule);
document.getElementById("best").addEventListener("click", () => {
  Object.assign(el.alpha, { value: 1.95 });
  Object.assign(el.delta, { value: 12 });
  Object.assign(el.p0, { value: 3 });
  Object.assign(el.theta, { value: Math.PI });
  Object.assign(el.s, { value: 0 });
  schedule();
});
update();
