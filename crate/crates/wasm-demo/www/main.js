import init, { topologyView, compareMomentum, theoryTable } from "./pkg/ppdm_wasm_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const fmt = (v) => (Number.isInteger(v) ? String(v) : Math.abs(v) < 1e-3 && v !== 0 ? v.toExponential(2) : v.toFixed(4));

function matrixTable(title, rows) {
  const t = document.createElement("table");
  t.className = "m";
  t.createCaption().textContent = title;
  for (const r of rows) {
    const tr = t.insertRow();
    for (const v of r) tr.insertCell().textContent = fmt(v);
  }
  return t;
}

function showMatrices() {
  const out = $("matrices");
  out.replaceChildren();
  try {
    const v = JSON.parse(topologyView($("topology").value, num("nodes"), num("alpha"), num("c"), num("gamma"), num("kappa")));
    const p = document.createElement("p");
    p.innerHTML = `|E| = ${v.edges.length}, degrees [${v.degrees.join(", ")}], &sigma;<sub>A</sub> = ${fmt(v.sigma_a)}, ` +
      `A&#7488;A + B&#7488;B = 2D: <span class="${v.gram_identity ? "ok" : "bad"}">${v.gram_identity}</span>`;
    out.append(p);
    if (v.incidence.length) out.append(matrixTable("incidence A", v.incidence));
    out.append(matrixTable("Laplacian", v.laplacian));
    out.append(matrixTable("Metropolis W", v.metropolis));
    out.append(matrixTable("W̃", v.w_tilde));
    out.append(matrixTable("Ψ", [v.psi]));
  } catch (e) {
    out.textContent = String(e);
  }
}

function drawPlot(curves) {
  const cv = $("plot");
  const ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  const panels = [["stationarity", 0], ["consensus", cv.width / 2]];
  const colors = ["#c2410c", "#1d4ed8"];
  const pad = { l: 52, r: 12, t: 18, b: 28 };
  const w = cv.width / 2 - pad.l - pad.r;
  const h = cv.height - pad.t - pad.b;
  for (const [key, x0] of panels) {
    const vals = curves.flatMap((c) => c[key]).filter((v) => v > 0);
    if (!vals.length) continue;
    const lo = Math.floor(Math.log10(Math.min(...vals)));
    const hi = Math.ceil(Math.log10(Math.max(...vals)));
    const kmax = Math.max(...curves.map((c) => c.iters[c.iters.length - 1]));
    const X = (k) => x0 + pad.l + (k / kmax) * w;
    const Y = (v) => pad.t + (1 - (Math.log10(Math.max(v, 10 ** lo)) - lo) / Math.max(hi - lo, 1)) * h;
    ctx.strokeStyle = "#ccc";
    ctx.fillStyle = "#555";
    ctx.font = "11px sans-serif";
    for (let e = lo; e <= hi; e++) {
      ctx.beginPath();
      ctx.moveTo(x0 + pad.l, Y(10 ** e));
      ctx.lineTo(x0 + pad.l + w, Y(10 ** e));
      ctx.stroke();
      ctx.fillText(`1e${e}`, x0 + 8, Y(10 ** e) + 4);
    }
    ctx.fillText(`${key} (iterations 0..${kmax})`, x0 + pad.l, cv.height - 8);
    curves.forEach((c, ci) => {
      ctx.strokeStyle = colors[ci % colors.length];
      ctx.beginPath();
      c.iters.forEach((k, i) => (i ? ctx.lineTo(X(k), Y(c[key][i])) : ctx.moveTo(X(k), Y(c[key][i]))));
      ctx.stroke();
      ctx.fillStyle = colors[ci % colors.length];
      ctx.fillText(c.label, x0 + pad.l + w - 70, pad.t + 14 * (ci + 1));
    });
  }
}

function runComparison() {
  $("runinfo").textContent = "running...";
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const r = JSON.parse(compareMomentum($("topology").value, num("nodes"), num("iters"), num("batch"), num("seed")));
      drawPlot(r.curves);
      const last = r.curves.map((c) => `${c.label}: ${fmt(c.stationarity[c.stationarity.length - 1])}`).join(", ");
      $("runinfo").textContent = `L = ${fmt(r.lipschitz)}, μ = ${fmt(r.weak_convexity)}; final stationarity ${last} ` +
        `(${(performance.now() - t0).toFixed(0)} ms)`;
      $("lip").value = r.lipschitz.toPrecision(4);
      $("mu").value = r.weak_convexity.toPrecision(4);
    } catch (e) {
      $("runinfo").textContent = String(e);
    }
  }, 10);
}

function evaluateTheory() {
  const t = $("theory");
  t.replaceChildren();
  try {
    const rows = JSON.parse(theoryTable($("topology").value, num("nodes"), num("alpha"), num("beta"), num("gamma"),
      num("c"), num("kappa"), num("eta"), num("lip"), num("mu")));
    for (const [k, v] of rows) {
      const tr = t.insertRow();
      tr.insertCell().textContent = k;
      const cell = tr.insertCell();
      cell.textContent = v;
      if (v === "false") cell.className = "bad";
      if (v === "true") cell.className = "ok";
    }
  } catch (e) {
    t.insertRow().insertCell().textContent = String(e);
  }
}

await init();
$("status").textContent = "";
$("show").onclick = showMatrices;
$("run").onclick = runComparison;
$("theory-btn").onclick = evaluateTheory;
showMatrices();
evaluateTheory();
