import init, { path_signature, expected_signature_image, rotation_log_ode } from "./pkg/sigpath_web.js";

const $ = (id) => document.getElementById(id);

function show(el, f) {
  try {
    el.classList.remove("err");
    return f();
  } catch (e) {
    el.classList.add("err");
    el.textContent = String(e);
  }
}

// drawing

const draw = $("draw");
const dctx = draw.getContext("2d");
let stroke = [];
let down = false;

function toPath(e) {
  const r = draw.getBoundingClientRect();
  const x = (e.clientX - r.left) / r.width * 2 - 1;
  const y = 1 - (e.clientY - r.top) / r.height * 2;
  return [x, y];
}

function redrawStroke() {
  dctx.clearRect(0, 0, draw.width, draw.height);
  dctx.strokeStyle = "#ddd";
  dctx.beginPath();
  dctx.moveTo(draw.width / 2, 0); dctx.lineTo(draw.width / 2, draw.height);
  dctx.moveTo(0, draw.height / 2); dctx.lineTo(draw.width, draw.height / 2);
  dctx.stroke();
  if (stroke.length < 2) return;
  dctx.strokeStyle = "#1f5fa8";
  dctx.lineWidth = 2;
  dctx.beginPath();
  stroke.forEach(([x, y], i) => {
    const px = (x + 1) / 2 * draw.width, py = (1 - y) / 2 * draw.height;
    i ? dctx.lineTo(px, py) : dctx.moveTo(px, py);
  });
  dctx.stroke();
}

function updateSignature() {
  const out = $("sig-out");
  if (stroke.length < 2) { out.textContent = "draw something"; return; }
  show(out, () => {
    const r = JSON.parse(path_signature(JSON.stringify(stroke), Number($("sig-depth").value)));
    const fmt = (o) => Object.entries(o).map(([k, v]) => `${k.padEnd(12)} ${v.toFixed(5)}`).join("\n");
    out.textContent = `Lévy area ${r.levy_area.toFixed(5)}\n\nlog-signature\n${fmt(r.log_signature)}\n\nsignature\n${fmt(r.signature)}`;
  });
}

draw.addEventListener("pointerdown", (e) => { down = true; stroke = [toPath(e)]; draw.setPointerCapture(e.pointerId); });
draw.addEventListener("pointermove", (e) => {
  if (!down) return;
  const p = toPath(e), q = stroke[stroke.length - 1];
  if (Math.hypot(p[0] - q[0], p[1] - q[1]) > 0.01) { stroke.push(p); redrawStroke(); }
});
draw.addEventListener("pointerup", () => { down = false; updateSignature(); });
$("sig-depth").addEventListener("change", updateSignature);
$("sig-clear").addEventListener("click", () => { stroke = []; redrawStroke(); updateSignature(); });

// heatmap

function colour(t) {
  // blue through white to red
  const a = Math.max(-1, Math.min(1, t));
  const c = Math.round(255 * (1 - Math.abs(a)));
  return a >= 0 ? [255, c, c] : [c, c, 255];
}

function runHeatmap() {
  const out = $("es-out");
  show(out, () => {
    const t0 = performance.now();
    const r = JSON.parse(expected_signature_image(1.0, Number($("es-h").value), $("es-word").value));
    const ms = performance.now() - t0;
    const vals = r.values.filter((v) => v !== null);
    const scale = Math.max(...vals.map(Math.abs)) || 1;
    const img = new ImageData(r.nx, r.ny);
    r.values.forEach((v, i) => {
      const [x, y] = [i % r.nx, r.ny - 1 - Math.floor(i / r.nx)];
      const [red, g, b] = v === null ? [240, 240, 240] : colour(v / scale);
      img.data.set([red, g, b, 255], 4 * (y * r.nx + x));
    });
    const heat = $("heat"), ctx = heat.getContext("2d");
    const tmp = new OffscreenCanvas(r.nx, r.ny);
    tmp.getContext("2d").putImageData(img, 0, 0);
    ctx.imageSmoothingEnabled = false;
    ctx.clearRect(0, 0, heat.width, heat.height);
    ctx.drawImage(tmp, 0, 0, heat.width, heat.height);
    const centre = r.values[Math.floor(r.ny / 2) * r.nx + Math.floor(r.nx / 2)];
    out.textContent = `word ${r.word}\ngrid ${r.nx}×${r.ny}\nmax |value| ${scale.toExponential(3)}\n` +
      `value near centre ${centre === null ? "-" : centre.toExponential(4)}\n` +
      `solver residual ${r.max_residual.toExponential(2)}\ntime ${ms.toFixed(0)} ms`;
  });
}

$("es-run").addEventListener("click", runHeatmap);

// log-ODE

function runLogOde() {
  const out = $("lo-out");
  show(out, () => {
    const r = JSON.parse(rotation_log_ode(
      Number($("lo-omega").value), Number($("lo-sigma").value),
      Number($("lo-steps").value), Number($("lo-depth").value)));
    const ode = $("ode"), ctx = ode.getContext("2d");
    const all = r.exact.concat(r.log_ode);
    const m = Math.max(...all.flat().map(Math.abs)) * 1.1 || 1;
    const px = ([x, y]) => [(x / m + 1) / 2 * ode.width, (1 - y / m) / 2 * ode.height];
    ctx.clearRect(0, 0, ode.width, ode.height);
    ctx.strokeStyle = "#999";
    ctx.beginPath();
    r.exact.forEach((p, i) => { const [a, b] = px(p); i ? ctx.lineTo(a, b) : ctx.moveTo(a, b); });
    ctx.stroke();
    ctx.fillStyle = "#c0392b";
    r.log_ode.forEach((p) => { const [a, b] = px(p); ctx.beginPath(); ctx.arc(a, b, 3, 0, 2 * Math.PI); ctx.fill(); });
    const last = r.log_ode[r.log_ode.length - 1], exact = r.exact[r.exact.length - 1];
    out.textContent = `max error ${r.max_error.toExponential(3)}\n\nfinal log-ODE ${last.map((v) => v.toFixed(6)).join(", ")}\n` +
      `final exact   ${exact.map((v) => v.toFixed(6)).join(", ")}`;
  });
}

$("lo-run").addEventListener("click", runLogOde);

await init();
$("status").textContent = "";
redrawStroke();
updateSignature();
runHeatmap();
runLogOde();
