import init, { dephasing_heatmap, depolarizing_curve, summary } from "./pkg/qphi_wasm.js";

const $ = (id) => document.getElementById(id);

function color(t) {
  // dark blue to yellow
  const r = Math.round(255 * Math.min(1, 2 * t));
  const g = Math.round(255 * t);
  const b = Math.round(255 * (1 - t) * 0.6 + 40);
  return `rgb(${r},${g},${b})`;
}

function drawHeatmap() {
  const n = Number($("points").value);
  const values = dephasing_heatmap(n, Number($("phi0").value), Number($("phi1").value));
  const canvas = $("heatmap");
  const ctx = canvas.getContext("2d");
  const cell = canvas.width / n;
  const max = Math.max(...values, 1e-12);
  let best = 0;
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const v = values[i * n + j];
      if (v > values[best]) best = i * n + j;
      ctx.fillStyle = color(v / max);
      ctx.fillRect(j * cell, i * cell, Math.ceil(cell), Math.ceil(cell));
    }
  }
  const step = Math.PI / (n - 1);
  const bi = Math.floor(best / n), bj = best % n;
  $("heatmap-info").textContent =
    `max Φ = ${values[best].toFixed(6)} at θ₀ = ${(bi * step).toFixed(3)}, θ₁ = ${(bj * step).toFixed(3)}`;
}

function drawCurve() {
  const points = 101;
  const values = depolarizing_curve($("curve-state").value, points);
  const canvas = $("curve");
  const ctx = canvas.getContext("2d");
  const pad = 30, w = canvas.width - 2 * pad, h = canvas.height - 2 * pad;
  const max = Math.max(...values, 1e-12);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#222";
  ctx.font = "12px system-ui";
  ctx.fillText("p = 0", pad, canvas.height - 10);
  ctx.fillText("p = 1", pad + w - 30, canvas.height - 10);
  ctx.fillText(`Φ = ${max.toFixed(4)}`, pad + 4, pad - 8);
  ctx.strokeStyle = "#1f5fbf";
  ctx.lineWidth = 2;
  ctx.beginPath();
  values.forEach((v, k) => {
    const x = pad + (w * k) / (points - 1);
    const y = pad + h * (1 - v / max);
    if (k === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

function showSummary() {
  const s = JSON.parse(summary($("summary-state").value));
  $("summary").textContent =
    `Φ = ${s.phi_nats.toFixed(7)} nats (${s.phi_bits.toFixed(7)} bits)\n` +
    `optimal cut ${s.cut}, ${s.tie_count} tied cut(s)\n` +
    `dendrogram ${s.newick}`;
}

function guarded(f) {
  return () => {
    try {
      $("error").textContent = "";
      f();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

await init();
for (const id of ["phi0", "phi1", "points"]) $(id).addEventListener("input", guarded(drawHeatmap));
$("curve-state").addEventListener("change", guarded(drawCurve));
$("summary-state").addEventListener("change", guarded(showSummary));
guarded(drawHeatmap)();
guarded(drawCurve)();
guarded(showSummary)();
