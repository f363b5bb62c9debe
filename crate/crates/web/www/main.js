import init, { defaultConfig, noiseMap, edgeProfiles, reconstruct } from "./pkg/qshadow_browser.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function config() {
  const side = num("grid");
  const cfg = JSON.parse(defaultConfig());
  Object.assign(cfg, {
    grid_width: side,
    grid_height: side,
    lo_waist: num("waist"),
    mask_lo: [0, 0],
    mask_hi: [Math.min(num("edge"), side), Math.floor(side / 2)],
    anti_squeezing_db: num("db"),
    radii: [num("radius")],
    clusters: num("clusters"),
    seed: num("seed"),
    dark_var: num("darkvar"),
    classical_photons: num("classical"),
    cross_section_span: Math.min(80, side),
  });
  return JSON.stringify(cfg);
}

function draw(canvas, raster, lo, hi) {
  canvas.width = raster.width;
  canvas.height = raster.height;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(raster.width, raster.height);
  raster.values.forEach((v, i) => {
    const p = 4 * i;
    if (v === null) {
      img.data.set([90, 20, 20, 255], p);
    } else {
      const g = Math.round(255 * Math.min(1, Math.max(0, (v - lo) / (hi - lo || 1))));
      img.data.set([g, g, g, 255], p);
    }
  });
  ctx.putImageData(img, 0, 0);
}

function plot(svg, series) {
  const w = svg.width.baseVal.value, h = svg.height.baseVal.value, pad = 20;
  svg.innerHTML = "";
  const n = series[0].values.length;
  const x = (i) => pad + (i / (n - 1)) * (w - 2 * pad);
  const y = (v) => h - pad - v * (h - 2 * pad);
  for (const s of series) {
    let d = "", pen = false;
    s.values.forEach((v, i) => {
      if (v === null) { pen = false; return; }
      d += `${pen ? "L" : "M"}${x(i).toFixed(1)},${y(Math.min(1.2, Math.max(-0.2, v))).toFixed(1)}`;
      pen = true;
    });
    const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
    path.setAttribute("d", d);
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", s.color);
    path.setAttribute("stroke-width", "1.5");
    svg.appendChild(path);
  }
  const legend = document.createElementNS("http://www.w3.org/2000/svg", "text");
  legend.setAttribute("x", pad);
  legend.setAttribute("y", 14);
  legend.textContent = series.map((s) => `${s.label} (${s.color})`).join("   ");
  svg.appendChild(legend);
}

function run(label, f) {
  $("status").textContent = `${label}...`;
  setTimeout(() => {
    const t0 = performance.now();
    try {
      f();
      $("status").textContent = `${label}: ${((performance.now() - t0) / 1000).toFixed(2)} s`;
    } catch (e) {
      $("status").textContent = `${label} failed: ${e.message ?? e}`;
    }
  }, 0);
}

await init();

$("btn-noise").onclick = () => run("noise map", () => {
  const out = JSON.parse(noiseMap(config(), num("radius"), $("unmatched").checked));
  const [lo, hi] = out.range ?? [0, 1];
  draw($("noise"), out.db, Math.min(0, lo), Math.max(hi, 0.1));
  $("noise-range").textContent = `10 log10 V from ${lo.toFixed(2)} to ${hi.toFixed(2)} dB`;
});

$("btn-profiles").onclick = () => run("edge profiles", () => {
  const out = JSON.parse(edgeProfiles(config()));
  const r = out.radii[0];
  plot($("profiles"), [
    { label: "object", color: "black", values: out.object.values },
    { label: `quantum S=${r.similarity_quantum.toFixed(3)}`, color: "blue", values: r.quantum.values },
    { label: `classical S=${r.similarity_classical.toFixed(3)}`, color: "orange", values: r.classical.values },
  ]);
});

$("btn-recon").onclick = () => run("reconstruction", () => {
  const out = JSON.parse(reconstruct(config()));
  const r = out.radii[0];
  draw($("tq"), r.quantum, 0, 1);
  draw($("tt"), r.classical, 0, 1);
  plot($("profiles"), [
    { label: "object", color: "black", values: out.object.values },
    { label: "quantum", color: "blue", values: r.quantum_section.values },
    { label: "classical", color: "orange", values: r.classical_section.values },
  ]);
  $("recon-scores").textContent =
    `similarity: quantum ${r.similarity_quantum.toFixed(3)} at ` +
    `${out.squeezed_photons_per_frame.toFixed(2)} photons/frame, classical ` +
    `${r.similarity_classical.toFixed(3)} at ${out.classical_photons_per_frame} photons/frame`;
});
