import init, { copulaSample, growth, queue } from "./pkg/permuton_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const seed = (id) => BigInt(Math.max(0, Math.floor(num(id))));

function scatter(canvas, pts, color = () => "#1f5fa8") {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const r = pts.length > 1000 ? 1 : 2;
  pts.forEach(([x, y], i) => {
    ctx.fillStyle = color(i);
    ctx.fillRect(x * (w - 8) + 2, h - 2 - y * (h - 8), r, r);
  });
}

function young(canvas, rows) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const cell = Math.max(1, Math.min((w - 4) / (rows[0] || 1), (h - 4) / rows.length));
  ctx.strokeStyle = "#555";
  rows.forEach((len, i) => {
    for (let j = 0; j < len; j++) ctx.strokeRect(2 + j * cell, 2 + i * cell, cell, cell);
  });
}

function patternTable(patterns) {
  if (!patterns) return "";
  const rows = patterns.map((p) => `<tr><td>${p.pattern.replaceAll(",", "")}</td><td>${p.frequency.toFixed(4)}</td></tr>`);
  return `<table>${rows.join("")}</table>`;
}

function guard(info, f) {
  try {
    f();
  } catch (e) {
    $(info).innerHTML = `<span class="err">${e}</span>`;
  }
}

function runCopula() {
  guard("c-info", () => {
    const v = JSON.parse(copulaSample($("c-copula").value, num("c-n"), seed("c-seed")));
    scatter($("c-raw"), v.raw, () => "#888");
    scatter($("c-plot"), v.points);
    const p = v.joint_p_value === null ? "" : `<p>joint length-3 test p = ${v.joint_p_value.toFixed(4)}</p>`;
    $("c-info").innerHTML = patternTable(v.patterns) + p;
  });
}

function runGrowth() {
  guard("g-info", () => {
    const v = JSON.parse(growth($("g-model").value, num("g-n"), seed("g-seed")));
    if (v.rows) {
      young($("g-plot"), v.rows);
      $("g-info").textContent = `λ = (${v.partition})`;
    } else {
      scatter($("g-plot"), v.points);
      $("g-info").innerHTML = patternTable(v.patterns);
    }
  });
}

function runQueue() {
  guard("q-info", () => {
    const v = JSON.parse(queue(num("q-lambda"), $("q-disc").value, num("q-n"), seed("q-seed")));
    const hue = (i) => `hsl(${(v.busy_period[i] * 47) % 360} 60% 42%)`;
    scatter($("q-plot"), v.points, hue);
    $("q-info").innerHTML =
      `<p>${v.periods} busy periods<br>t(21) = ${v.t21.toFixed(5)}<br>bound 2M/(n−1) = ${v.bound.toFixed(5)}</p>`;
  });
}

await init();
$("c-go").onclick = runCopula;
$("g-go").onclick = runGrowth;
$("q-go").onclick = runQueue;
runCopula();
runGrowth();
runQueue();
