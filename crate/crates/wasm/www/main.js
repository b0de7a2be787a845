import init, { simulate, testRows, a2Spectrum } from "./pkg/lingof_wasm.js";

const $ = (id) => document.getElementById(id);

function drawScatter(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pad = 20;
  const range = (v) => [Math.min(...v), Math.max(...v)];
  const [x0, x1] = range(xs);
  const [y0, y1] = range(ys);
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.fillStyle = "rgba(30, 80, 160, 0.45)";
  for (let i = 0; i < xs.length; i++) {
    ctx.fillRect(sx(xs[i]) - 1.5, sy(ys[i]) - 1.5, 3, 3);
  }
}

function drawSpectrum(canvas, spec) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const pad = 35;
  const k = spec.rank_bound;
  const tail = spec.singular_values.map((s) => s[k] ?? 0);
  const lead = spec.singular_values.map((s) => s[k - 1] ?? 0);
  const top = Math.max(...tail, ...lead) || 1;
  const dmax = Math.max(...spec.deltas) || 1;
  const sx = (d) => pad + (d / dmax) * (w - 2 * pad);
  const sy = (v) => h - pad - (v / top) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  const line = (vals, color) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    vals.forEach((v, i) => (i ? ctx.lineTo(sx(spec.deltas[i]), sy(v)) : ctx.moveTo(sx(spec.deltas[i]), sy(v))));
    ctx.stroke();
  };
  line(lead, "#888");
  line(tail, "#c33");
  ctx.fillStyle = "#222";
  ctx.fillText(`delta 0 .. ${dmax}`, w / 2 - 25, h - 10);
  ctx.fillStyle = "#c33";
  ctx.fillText(`singular value ${k + 1}`, pad + 5, pad + 12);
  ctx.fillStyle = "#888";
  ctx.fillText(`singular value ${k}`, pad + 5, pad + 26);
}

function parseTable(text) {
  const lines = text.split(/\r?\n/).map((l) => l.trim()).filter((l) => l && !l.startsWith("#"));
  const rows = lines.map((l) => l.split(/[\s,;]+/).map(Number));
  if (rows.length && rows[0].some(Number.isNaN)) rows.shift();
  const p = rows.length ? rows[0].length : 0;
  rows.forEach((r, i) => {
    if (r.length !== p) throw new Error(`row ${i + 1} has ${r.length} values, expected ${p}`);
    const bad = r.findIndex((v) => !Number.isFinite(v));
    if (bad >= 0) throw new Error(`row ${i + 1}, column ${bad + 1} is not a number`);
  });
  return { values: Float64Array.from(rows.flat()), p };
}

function runSimulation() {
  $("simerr").textContent = "";
  try {
    const data = JSON.parse(simulate($("alt").value, Number($("delta").value), Number($("n").value), Number($("seed").value)));
    drawScatter($("scatter"), data.x, data.y);
    $("table").value = "x,y\n" + data.x.map((x, i) => `${x.toFixed(6)},${data.y[i].toFixed(6)}`).join("\n");
  } catch (e) {
    $("simerr").textContent = String(e.message ?? e);
  }
}

function runTest() {
  $("decision").textContent = "running...";
  $("result").textContent = "";
  setTimeout(() => {
    try {
      const { values, p } = parseTable($("table").value);
      const alpha = Number($("alpha").value);
      const r = JSON.parse(testRows(values, p, Number($("l").value), $("method").value, alpha, Number($("seed").value)));
      $("decision").textContent = `${r.decision.toUpperCase()} at alpha = ${r.alpha} (p-value ${r.p_value.toFixed(4)}, ${r.method})`;
      $("result").textContent = JSON.stringify(r, null, 2);
    } catch (e) {
      $("decision").textContent = "";
      $("result").textContent = "error: " + String(e.message ?? e);
    }
  }, 10);
}

function runSpectrum() {
  const deltas = Array.from({ length: 41 }, (_, i) => i * 0.125);
  try {
    const spec = JSON.parse(a2Spectrum(Float64Array.from(deltas), Number($("aseed").value)));
    drawSpectrum($("spectrum"), spec);
    const k = spec.rank_bound;
    $("spectext").textContent = `${spec.matrix}, rank bound ${k}\n` +
      spec.deltas.filter((_, i) => i % 8 === 0)
        .map((d) => `delta ${d.toFixed(2)}: ${spec.singular_values[spec.deltas.indexOf(d)].map((s) => s.toExponential(3)).join("  ")}`)
        .join("\n");
  } catch (e) {
    $("spectext").textContent = "error: " + String(e.message ?? e);
  }
}

await init();
$("sim").onclick = runSimulation;
$("run").onclick = runTest;
$("spec").onclick = runSpectrum;
runSimulation();
runSpectrum();
