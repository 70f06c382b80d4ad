import init, { design, trace, phase_scan } from "./pkg/esst_web.js";

const $ = (id) => document.getElementById(id);
const status = (msg) => { $("status").textContent = msg; };
const COLORS = ["#1f77b4", "#2ca02c", "#d62728"];

function guarded(fn) {
  return () => {
    status("");
    try {
      fn();
    } catch (e) {
      status(e.message ?? String(e));
    }
  };
}

function showDesign() {
  const t = design($("target").value, $("hand").value, Number($("tau0").value));
  const head = "<tr><th>ch</th><th>A (rad/D)</th><th>phase (rad)</th><th>carrier (MHz)</th><th>center (ns)</th><th>&tau;0 (ns)</th></tr>";
  const rows = ["a", "b", "c"].map((ch, i) => {
    const cells = Array.from(t.slice(5 * i, 5 * i + 5), (v, j) => (j === 2 ? v.toFixed(0) : v.toFixed(4)));
    return `<tr><td>${ch}</td>${cells.map((c) => `<td>${c}</td>`).join("")}</tr>`;
  });
  $("pulses").innerHTML = head + rows.join("");
}

function plotTrace(tr) {
  const cv = $("trace-plot");
  const g = cv.getContext("2d");
  const times = tr.times();
  const t0 = times[0];
  const t1 = times[times.length - 1];
  const x = (t) => 40 + ((t - t0) / (t1 - t0)) * (cv.width - 50);
  const y = (p) => cv.height - 20 - p * (cv.height - 30);
  g.clearRect(0, 0, cv.width, cv.height);
  g.strokeStyle = "#999";
  g.strokeRect(40, 10, cv.width - 50, cv.height - 30);
  g.fillStyle = "#555";
  g.fillText("1", 28, y(1) + 4);
  g.fillText("0", 28, y(0) + 4);
  g.fillText(`${t0.toFixed(0)} ns`, 40, cv.height - 5);
  g.fillText(`${t1.toFixed(0)} ns`, cv.width - 50, cv.height - 5);
  for (const [hand, dash] of [["left", []], ["right", [6, 4]]]) {
    g.setLineDash(dash);
    for (let level = 0; level < 3; level++) {
      const p = tr[hand](level);
      g.strokeStyle = COLORS[level];
      g.beginPath();
      p.forEach((v, i) => (i ? g.lineTo(x(times[i]), y(v)) : g.moveTo(x(times[i]), y(v))));
      g.stroke();
    }
  }
  g.setLineDash([]);
}

function runTrace() {
  const tr = trace($("target").value, Number($("tau0").value), Number($("phase").value), 800);
  plotTrace(tr);
  tr.free();
}

function heatmap(canvas, values, nPhase, nTau) {
  const g = canvas.getContext("2d");
  const w = canvas.width / nTau;
  const h = canvas.height / nPhase;
  for (let i = 0; i < nPhase; i++) {
    for (let j = 0; j < nTau; j++) {
      const v = Math.min(1, Math.max(0, values[i * nTau + j]));
      g.fillStyle = `hsl(${240 - 240 * v}, 80%, ${25 + 40 * v}%)`;
      g.fillRect(j * w, canvas.height - (i + 1) * h, w + 1, h + 1);
    }
  }
}

function runScan() {
  const n = Math.max(2, Math.min(128, Number($("grid").value) | 0));
  const v = phase_scan($("target").value, Number($("tau-min").value), Number($("tau-max").value), n, n);
  heatmap($("scan-left"), v.subarray(0, n * n), n, n);
  heatmap($("scan-right"), v.subarray(n * n), n, n);
}

await init();
$("phase").addEventListener("input", () => { $("phase-value").textContent = Number($("phase").value).toFixed(3); });
$("design").addEventListener("click", guarded(showDesign));
$("trace").addEventListener("click", guarded(runTrace));
$("scan").addEventListener("click", guarded(runScan));
guarded(showDesign)();
