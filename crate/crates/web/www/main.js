import init, { mfd_curves, shares_for, preset_names, run_preset } from "./pkg/buslane_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

function plot(canvas, series, xLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap(s => s.points.map(p => p[0]));
  const ys = series.flatMap(s => s.points.map(p => p[1]));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(0, ...ys), Math.max(...ys)];
  const sx = x => pad + (x - x0) / (x1 - x0 || 1) * (w - 2 * pad);
  const sy = y => h - pad - (y - y0) / (y1 - y0 || 1) * (h - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(`${x0.toFixed(0)}`, pad, h - pad + 14);
  ctx.fillText(`${x1.toFixed(1)} ${xLabel}`, w - pad - 70, h - pad + 14);
  ctx.fillText(`${y1.toFixed(1)}`, 4, pad + 4);
  ctx.fillText(`${y0.toFixed(1)}`, 4, h - pad);
  series.forEach((s, i) => {
    ctx.strokeStyle = COLORS[i % COLORS.length];
    ctx.beginPath();
    s.points.forEach(([x, y], j) => (j ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(s.label, w - pad - 120, pad + 16 + 14 * i);
  });
}

function drawCurves() {
  const c = JSON.parse(mfd_curves(200));
  plot(document.getElementById("mfd"), [
    { label: "v_V (vehicle net)", points: c.vehicle.map(([n, v]) => [n, v]) },
    { label: "v_p (pool, lane)", points: c.lane.map(([n, v]) => [n, v]) },
    { label: "v_b (bus)", points: c.lane.map(([n, , b]) => [n, b]) },
  ], "veh");
}

function updateShares() {
  const val = id => parseFloat(document.getElementById(id).value);
  for (const id of ["vv", "vp", "phiv", "phib"]) {
    document.getElementById(`${id}-out`).textContent = val(id).toFixed(1);
  }
  const s = JSON.parse(shares_for(val("vv"), val("vp"), val("phiv"), val("phib")));
  const box = document.getElementById("shares");
  box.innerHTML = "";
  if (s.error) { box.textContent = s.error; return; }
  [["solo", s.solo], ["pool V", s.pool_v], ["pool B", s.pool_b]].forEach(([name, v], i) => {
    const d = document.createElement("div");
    d.style.width = `${100 * v}%`;
    d.style.background = COLORS[i];
    d.textContent = `${name} ${(100 * v).toFixed(1)}%`;
    box.appendChild(d);
  });
}

function runScenario() {
  const status = document.getElementById("status");
  status.textContent = "running...";
  setTimeout(() => {
    const t0 = performance.now();
    const r = JSON.parse(run_preset(
      document.getElementById("preset").value,
      parseFloat(document.getElementById("hours").value),
      document.getElementById("aband").checked,
      10,
    ));
    if (r.error) { status.textContent = r.error; return; }
    status.textContent = `${r.steps} steps in ${((performance.now() - t0) / 1000).toFixed(2)} s`;
    plot(document.getElementById("series"), [
      { label: "v_V km/hr", points: r.series.map(p => [p.t, p.v_v]) },
      { label: "v_b km/hr", points: r.series.map(p => [p.t, p.v_b]) },
      { label: "10 x phi_B", points: r.series.map(p => [p.t, 10 * p.phi_b]) },
      { label: "20 x beta_B", points: r.series.map(p => [p.t, 20 * p.beta_b]) },
    ], "hr");
    const rows = Object.entries(r.summary)
      .map(([k, v]) => `<tr><th>${k}</th><td>${v.toFixed(1)}</td></tr>`).join("");
    document.getElementById("summary").innerHTML = rows;
  }, 10);
}

async function main() {
  try {
    await init();
  } catch (e) {
    document.getElementById("error").textContent = `Could not load the WebAssembly module: ${e}`;
    return;
  }
  const select = document.getElementById("preset");
  for (const name of JSON.parse(preset_names())) {
    const o = document.createElement("option");
    o.value = o.textContent = name;
    select.appendChild(o);
  }
  select.value = "free";
  drawCurves();
  for (const id of ["vv", "vp", "phiv", "phib"]) {
    document.getElementById(id).addEventListener("input", updateShares);
  }
  updateShares();
  document.getElementById("run").addEventListener("click", runScenario);
}

main();
