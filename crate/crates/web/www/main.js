// Expects `wasm-bindgen --target web` output in ./pkg
import init, { Simulation, stokes_check } from "./pkg/magel_web.js";

const N = 32;
const $ = (id) => document.getElementById(id);
let sim = null;
let playing = false;

function draw(canvas, pixels) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(N, N);
  // solver storage has x slow; canvas rows are y
  for (let i = 0; i < N; i++) {
    for (let j = 0; j < N; j++) {
      const src = 4 * (i * N + j);
      const dst = 4 * ((N - 1 - j) * N + i);
      for (let c = 0; c < 4; c++) img.data[dst + c] = pixels[src + c];
    }
  }
  ctx.putImageData(img, 0, 0);
}

function refresh() {
  const k = parseFloat($("cutoff").value);
  $("kval").textContent = k;
  $("t").textContent = sim.time().toFixed(3);
  $("energy").textContent = sim.energy().toExponential(6);
  $("sphere").textContent = sim.sphere_residual().toExponential(2);
  $("det").textContent = sim.det_residual().toExponential(2);
  $("ratio").textContent = sim.truncation_energy_ratio(k).toFixed(6);
  draw($("full"), sim.pixels());
  draw($("trunc"), sim.truncated_pixels(k));
}

function reset() {
  try {
    sim = new Simulation(N, $("kind").value, parseFloat($("amp").value), BigInt($("seed").value), 2e-3);
  } catch (e) {
    alert(e);
    return;
  }
  refresh();
}

function frame() {
  if (!playing) return;
  try {
    sim.step(5);
  } catch (e) {
    playing = false;
    $("play").textContent = "play";
    alert(e);
  }
  refresh();
  requestAnimationFrame(frame);
}

await init();
reset();

$("reset").onclick = reset;
$("play").onclick = () => {
  playing = !playing;
  $("play").textContent = playing ? "pause" : "play";
  if (playing) requestAnimationFrame(frame);
};
$("cutoff").oninput = refresh;
$("full").onclick = (ev) => {
  const r = ev.target.getBoundingClientRect();
  const x = ((ev.clientX - r.left) / r.width) * 2 * Math.PI;
  const y = (1 - (ev.clientY - r.top) / r.height) * 2 * Math.PI;
  sim.poke(x, y, 1.5);
  refresh();
};
$("solve").onclick = () => {
  const [rm, rd, w, q] = stokes_check(64, +$("sa").value, +$("sb").value, +$("sc").value);
  $("stokes").textContent =
    `momentum residual ${rm.toExponential(2)}, divergence residual ${rd.toExponential(2)}, ` +
    `max|w| ${w.toFixed(4)}, max|q| ${q.toFixed(4)}`;
};
