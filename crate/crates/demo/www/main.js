import init, { coefficients, forward_source, Simulation } from "./pkg/fdjit_demo.js";

const $ = (id) => document.getElementById(id);

function show(target, f) {
  try {
    target.textContent = f();
  } catch (e) {
    target.textContent = `error: ${e.message ?? e}`;
  }
}

function updateWeights() {
  show($("weights"), () => coefficients(Number($("deriv").value), Number($("order").value)));
}

function updateSource() {
  show($("source"), () =>
    forward_source(
      Number($("ndim").value),
      Number($("src-order").value),
      $("par").checked,
      $("simd").checked,
      $("block").checked,
    ),
  );
}

let sim = null;

function draw(k) {
  if (!sim) return;
  const n = sim.size();
  const data = sim.frame(k);
  let peak = 0;
  for (const v of data) peak = Math.max(peak, Math.abs(v));
  peak = peak || 1;
  const canvas = $("field");
  canvas.width = n;
  canvas.height = n;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let i = 0; i < data.length; i++) {
    const s = Math.max(-1, Math.min(1, data[i] / peak));
    img.data[4 * i] = s > 0 ? 255 : Math.round(255 * (1 + s));
    img.data[4 * i + 1] = Math.round(255 * (1 - Math.abs(s)));
    img.data[4 * i + 2] = s < 0 ? 255 : Math.round(255 * (1 - s));
    img.data[4 * i + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
}

function run() {
  $("status").textContent = "Running...";
  setTimeout(() => {
    try {
      const n = Number($("n").value);
      if (sim) sim.free();
      sim = new Simulation(n, 4, 400, Number($("anomaly").value), 4);
      $("frame").max = sim.frame_count() - 1;
      $("frame").value = sim.frame_count() - 1;
      draw(sim.frame_count() - 1);
      $("status").textContent = "";
    } catch (e) {
      $("status").textContent = `error: ${e.message ?? e}`;
    }
  }, 0);
}

await init();
$("status").textContent = "";
for (const id of ["deriv", "order"]) $(id).addEventListener("input", updateWeights);
for (const id of ["ndim", "src-order", "par", "simd", "block"]) $(id).addEventListener("input", updateSource);
$("run").addEventListener("click", run);
$("frame").addEventListener("input", (e) => draw(Number(e.target.value)));
updateWeights();
updateSource();
