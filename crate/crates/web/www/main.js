import init, { simulateAndSmooth, rollingDiagnostics, fitModel } from "./pkg/amh_web.js";

const DEFAULT_THETA = {
  garch: { omega: 0.0005, a1: 0.2, b1: 0.7, sigma2_w: 0.0001 },
  garchm: { omega: 0.0005, a1: 0.2, b1: 0.7, delta: 0.5, sigma2_w: 0.0001 },
  tgarch: { omega: 0.0005, a1_plus: 0.1, a1_minus: 0.3, b1: 0.6, sigma2_w: 0.0001 },
  agarch: { omega: 0.0005, a1: 0.15, a1_plus: 0.05, b1: 0.7, sigma2_w: 0.0001 },
  tvar: { sigma2_w: [0.0001], sigma2_eps: 0.002 },
};

const $ = (id) => document.getElementById(id);

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "error" : "";
}

// Draws each series against its index; null values break the line.
// A series is { values, color, dash?, width? }.
function plot(canvas, series, xOffset = []) {
  const ctx = canvas.getContext("2d");
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const pad = 36;
  let n = 0, lo = Infinity, hi = -Infinity;
  series.forEach((s, k) => {
    const off = xOffset[k] || 0;
    n = Math.max(n, off + s.values.length);
    for (const v of s.values) {
      if (v === null || !Number.isFinite(v)) continue;
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  });
  if (!(hi > lo)) { hi = lo + 1; lo -= 1; }
  const x = (i) => pad + (i / Math.max(n - 1, 1)) * (width - 2 * pad);
  const y = (v) => height - pad / 2 - ((v - lo) / (hi - lo)) * (height - pad);

  ctx.strokeStyle = "#ddd";
  ctx.fillStyle = "#666";
  ctx.font = "11px sans-serif";
  for (const v of [lo, (lo + hi) / 2, hi]) {
    ctx.beginPath();
    ctx.moveTo(pad, y(v));
    ctx.lineTo(width - pad / 2, y(v));
    ctx.stroke();
    ctx.fillText(v.toFixed(3), 2, y(v) + 4);
  }
  if (lo < 0 && hi > 0) {
    ctx.strokeStyle = "#999";
    ctx.beginPath();
    ctx.moveTo(pad, y(0));
    ctx.lineTo(width - pad / 2, y(0));
    ctx.stroke();
  }

  series.forEach((s, k) => {
    const off = xOffset[k] || 0;
    ctx.strokeStyle = s.color;
    ctx.lineWidth = s.width || 1.5;
    ctx.setLineDash(s.dash || []);
    ctx.beginPath();
    let pen = false;
    s.values.forEach((v, i) => {
      if (v === null || !Number.isFinite(v)) { pen = false; return; }
      if (pen) ctx.lineTo(x(off + i), y(v));
      else ctx.moveTo(x(off + i), y(v));
      pen = true;
    });
    ctx.stroke();
  });
  ctx.setLineDash([]);
}

function monthEnd(i) {
  // Month i after 1994-12; day 0 of the next month is the last day of this one.
  return new Date(Date.UTC(1995, i, 0)).toISOString().slice(0, 10);
}

function pricesCsv(returns) {
  const lines = ["date,close", `${monthEnd(0)},100`];
  let logPrice = Math.log(100);
  returns.forEach((r, i) => {
    logPrice += r;
    lines.push(`${monthEnd(i + 1)},${Math.exp(logPrice)}`);
  });
  return lines.join("\n") + "\n";
}

function runSimulation() {
  try {
    const model = $("sim-model").value;
    const theta = $("sim-theta").value;
    const order = model === "tvar" ? (JSON.parse(theta).sigma2_w || [0]).length : 1;
    const out = JSON.parse(
      simulateAndSmooth(model, order, theta, Number($("sim-length").value), Number($("sim-seed").value)),
    );
    const skip = out.first_step;
    const trueBeta = out.true_beta.slice(skip);
    plot($("sim-plot"), [
      { values: out.lower, color: "#9cf", width: 1 },
      { values: out.upper, color: "#9cf", width: 1 },
      { values: out.filtered_beta, color: "#aaa", width: 1 },
      { values: out.smoothed_beta, color: "#06c" },
      { values: trueBeta, color: "#000", dash: [4, 3] },
    ]);
    show("sim-msg", `log-likelihood at the true parameters: ${out.log_lf.toFixed(3)}`);
    $("prices").value = pricesCsv(out.y);
  } catch (e) {
    show("sim-msg", e.message || String(e), true);
  }
}

function runRolling() {
  try {
    const alpha = Number($("roll-alpha").value);
    const out = JSON.parse(
      rollingDiagnostics($("prices").value, Number($("roll-window").value), Number($("roll-lag").value), alpha),
    );
    const n = out.acf.length;
    plot($("roll-plot"), [
      { values: Array(n).fill(out.lower), color: "#9cf", dash: [4, 3], width: 1 },
      { values: Array(n).fill(out.upper), color: "#9cf", dash: [4, 3], width: 1 },
      { values: Array(n).fill(alpha), color: "#f99", dash: [2, 2], width: 1 },
      { values: out.acf, color: "#06c" },
      { values: out.lb_p_value, color: "#c00", width: 1 },
    ]);
    const outside = out.acf.filter((r) => r !== null && (r < out.lower || r > out.upper)).length;
    show(
      "roll-msg",
      `${n} windows, ${out.end_dates[0]} to ${out.end_dates[n - 1]}; ` +
        `${outside} outside the ${(1 - alpha) * 100}% band (+/-${out.upper.toFixed(4)}).`,
    );
  } catch (e) {
    show("roll-msg", e.message || String(e), true);
  }
}

function runFit() {
  show("fit-msg", "fitting...");
  // Let the message paint before the synchronous fit blocks the page.
  setTimeout(() => {
    try {
      const out = JSON.parse(fitModel($("prices").value, $("fit-model").value, Number($("fit-order").value)));
      plot($("fit-plot"), [{ values: out.smoothed_beta.map((p) => p.value), color: "#06c" }]);
      const { smoothed_beta, ...rest } = out;
      $("fit-out").textContent = JSON.stringify(rest, null, 2);
      show("fit-msg", `AIC ${out.aic.toFixed(3)}, ${out.converged ? "converged" : "not converged"}`);
    } catch (e) {
      show("fit-msg", e.message || String(e), true);
    }
  }, 10);
}

function syncTheta() {
  $("sim-theta").value = JSON.stringify(DEFAULT_THETA[$("sim-model").value]);
}

await init();
$("sim-model").addEventListener("change", syncTheta);
$("sim-run").addEventListener("click", runSimulation);
$("roll-run").addEventListener("click", runRolling);
$("fit-run").addEventListener("click", runFit);
syncTheta();
runSimulation();
runRolling();
