import { spawnSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  ShapeMismatchError,
  UnknownLayerError,
  buildTapModel,
  diskSaveHandler,
  exportTraces,
  loadModel,
} from "../src/index";

const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "exp-"));
afterAll(() => fs.rmSync(tmp, { recursive: true, force: true }));

// Byte-level readers kept independent from src/format.ts so the writers
// are checked against the layout itself, not their own code.
function readTrace(p: string): { n: number; d: number; values: Float32Array } {
  const buf = fs.readFileSync(p);
  expect(buf.subarray(0, 4).toString("ascii")).toBe("ATRC");
  expect(buf.readUInt32LE(4)).toBe(1);
  const n = Number(buf.readBigUInt64LE(8));
  const d = Number(buf.readBigUInt64LE(16));
  expect(buf.length).toBe(24 + n * d * 4);
  const values = new Float32Array(n * d);
  for (let i = 0; i < n * d; i++) {
    values[i] = buf.readFloatLE(24 + i * 4);
  }
  return { n, d, values };
}

function readLabels(p: string): { trueLabels: number[]; predicted: number[] } {
  const buf = fs.readFileSync(p);
  expect(buf.subarray(0, 4).toString("ascii")).toBe("ALBL");
  expect(buf.readUInt32LE(4)).toBe(1);
  const n = Number(buf.readBigUInt64LE(8));
  expect(buf.length).toBe(16 + n * 8);
  const trueLabels: number[] = [];
  const predicted: number[] = [];
  for (let i = 0; i < n; i++) {
    trueLabels.push(buf.readUInt32LE(16 + i * 8));
    predicted.push(buf.readUInt32LE(16 + i * 8 + 4));
  }
  return { trueLabels, predicted };
}

// Fixed-weight 2 -> 3 -> 2 network: hidden output is [x0, x1, 100] and the
// head logits are [2*x0, x1 - x0], so every activation is hand-checkable.
function buildFixtureModel(): tf.LayersModel {
  const input = tf.input({ shape: [2], name: "feats" });
  const hidden = tf.layers
    .dense({ units: 3, activation: "linear", name: "hidden" })
    .apply(input) as tf.SymbolicTensor;
  const head = tf.layers
    .dense({ units: 2, activation: "softmax", name: "head" })
    .apply(hidden) as tf.SymbolicTensor;
  const model = tf.model({ inputs: input, outputs: head });
  model.getLayer("hidden").setWeights([
    tf.tensor2d([
      [1, 0, 0],
      [0, 1, 0],
    ]),
    tf.tensor1d([0, 0, 100]),
  ]);
  model.getLayer("head").setWeights([
    tf.tensor2d([
      [2, -1],
      [0, 1],
      [0, 0],
    ]),
    tf.tensor1d([0, 0]),
  ]);
  return model;
}

const modelDir = path.join(tmp, "model");
const FEATURES = [
  [0, 0],
  [1, -1],
  [2, 3],
  [-4, 0.5],
  [10, -10],
];
const TRUE_LABELS = [0, 1, 0, 1, 1];
// argmax([2*x0, x1 - x0]) per row; ties resolve to the first index.
const PREDICTED = [0, 0, 0, 1, 0];
const dataCsv = path.join(tmp, "data.csv");

beforeAll(async () => {
  await buildFixtureModel().save(diskSaveHandler(modelDir));
  const lines = ["label,f0,f1"];
  FEATURES.forEach((row, i) => lines.push(`${TRUE_LABELS[i]},${row[0]},${row[1]}`));
  fs.writeFileSync(dataCsv, lines.join("\n") + "\n");
});

describe("exportTraces", () => {
  it("writes hand-checkable traces and labels", async () => {
    const out = path.join(tmp, "run1");
    const result = await exportTraces({
      modelPath: modelDir,
      layers: ["hidden"],
      dataPath: dataCsv,
      outDir: out,
    });
    expect(result.nSamples).toBe(5);
    expect(result.layerWidths).toEqual([3]);
    expect(result.accuracy).toBeCloseTo(3 / 5, 12);

    const trace = readTrace(path.join(out, "hidden.atrc"));
    expect(trace.n).toBe(5);
    expect(trace.d).toBe(3);
    FEATURES.forEach((row, i) => {
      expect(trace.values[i * 3 + 0]).toBe(Math.fround(row[0]));
      expect(trace.values[i * 3 + 1]).toBe(Math.fround(row[1]));
      expect(trace.values[i * 3 + 2]).toBe(100);
    });

    const labels = readLabels(path.join(out, "labels.albl"));
    expect(labels.trueLabels).toEqual(TRUE_LABELS);
    expect(labels.predicted).toEqual(PREDICTED);
  });

  it("captures several layers at once, head included", async () => {
    const out = path.join(tmp, "run2");
    const result = await exportTraces({
      modelPath: modelDir,
      layers: ["hidden", "head"],
      dataPath: dataCsv,
      outDir: out,
    });
    expect(result.layerWidths).toEqual([3, 2]);

    const head = readTrace(path.join(out, "head.atrc"));
    expect(head.d).toBe(2);
    FEATURES.forEach((row, i) => {
      const logits = [2 * row[0], row[1] - row[0]];
      const m = Math.max(...logits);
      const exps = logits.map((z) => Math.exp(z - m));
      const z = exps[0] + exps[1];
      expect(head.values[i * 2 + 0]).toBeCloseTo(exps[0] / z, 5);
      expect(head.values[i * 2 + 1]).toBeCloseTo(exps[1] / z, 5);
      expect(head.values[i * 2 + 0] + head.values[i * 2 + 1]).toBeCloseTo(1.0, 5);
    });
  });

  it("keeps rows in dataset order across uneven batches", async () => {
    const n = 10;
    const csv = path.join(tmp, "aligned.csv");
    const lines = ["label,f0,f1"];
    for (let i = 0; i < n; i++) {
      lines.push(`${i % 2},${i},0`);
    }
    fs.writeFileSync(csv, lines.join("\n") + "\n");

    const outSmall = path.join(tmp, "run3a");
    const outBig = path.join(tmp, "run3b");
    await exportTraces({
      modelPath: modelDir,
      layers: ["hidden"],
      dataPath: csv,
      outDir: outSmall,
      batchSize: 3,
    });
    await exportTraces({
      modelPath: modelDir,
      layers: ["hidden"],
      dataPath: csv,
      outDir: outBig,
      batchSize: 64,
    });

    const trace = readTrace(path.join(outSmall, "hidden.atrc"));
    for (let i = 0; i < n; i++) {
      expect(trace.values[i * 3 + 0]).toBe(i);
      expect(trace.values[i * 3 + 1]).toBe(0);
      expect(trace.values[i * 3 + 2]).toBe(100);
    }
    const a = fs.readFileSync(path.join(outSmall, "hidden.atrc"));
    const b = fs.readFileSync(path.join(outBig, "hidden.atrc"));
    expect(a.equals(b)).toBe(true);
    const la = fs.readFileSync(path.join(outSmall, "labels.albl"));
    const lb = fs.readFileSync(path.join(outBig, "labels.albl"));
    expect(la.equals(lb)).toBe(true);
  });

  it("records predictions that match a direct forward pass", async () => {
    const n = 40;
    const csv = path.join(tmp, "preds.csv");
    const lines = ["label,f0,f1"];
    const rows: number[][] = [];
    for (let i = 0; i < n; i++) {
      // Deterministic spread of positive/negative feature pairs.
      const row = [Math.sin(i * 1.7) * 3, Math.cos(i * 0.9) * 3];
      rows.push(row);
      lines.push(`${i % 2},${row[0]},${row[1]}`);
    }
    fs.writeFileSync(csv, lines.join("\n") + "\n");

    const out = path.join(tmp, "run4");
    await exportTraces({
      modelPath: modelDir,
      layers: ["hidden"],
      dataPath: csv,
      outDir: out,
      batchSize: 7,
    });
    const labels = readLabels(path.join(out, "labels.albl"));

    const model = await loadModel(modelDir);
    const direct = tf.tidy(() => {
      const xs = tf.tensor2d(rows.map((r) => [Math.fround(r[0]), Math.fround(r[1])]));
      return Array.from(tf.argMax(model.predict(xs) as tf.Tensor, -1).dataSync());
    });
    expect(labels.predicted).toEqual(direct);
  });

  it("rejects unknown layers, naming the available ones", async () => {
    const out = path.join(tmp, "run5");
    let caught: Error | null = null;
    try {
      await exportTraces({
        modelPath: modelDir,
        layers: ["hidden", "banana"],
        dataPath: dataCsv,
        outDir: out,
      });
    } catch (err) {
      caught = err as Error;
    }
    expect(caught).toBeInstanceOf(UnknownLayerError);
    expect(caught!.message).toContain("banana");
    expect(caught!.message).toContain("hidden");
    expect(caught!.message).toContain("head");
  });

  it("rejects feature widths that do not fit the model input", async () => {
    const csv = path.join(tmp, "wide.csv");
    fs.writeFileSync(csv, "label,f0,f1,f2\n0,1,2,3\n");
    await expect(
      exportTraces({
        modelPath: modelDir,
        layers: ["hidden"],
        dataPath: csv,
        outDir: path.join(tmp, "run6"),
      }),
    ).rejects.toThrow(ShapeMismatchError);
  });

  it("flattens rank-3 activations row-major, or averages them on request", async () => {
    // Input of 6 features reshaped to [3, 2]; flattening must reproduce
    // the original row and averaging must mean over the spatial axis.
    const input = tf.input({ shape: [6], name: "feats" });
    const cube = tf.layers
      .reshape({ targetShape: [3, 2], name: "cube" })
      .apply(input) as tf.SymbolicTensor;
    const flat = tf.layers.flatten({ name: "flatten" }).apply(cube) as tf.SymbolicTensor;
    const head = tf.layers
      .dense({ units: 2, activation: "softmax", name: "head" })
      .apply(flat) as tf.SymbolicTensor;
    const model = tf.model({ inputs: input, outputs: head });
    const cubeDir = path.join(tmp, "cube-model");
    await model.save(diskSaveHandler(cubeDir));

    const csv = path.join(tmp, "cube.csv");
    fs.writeFileSync(csv, "label,a,b,c,d,e,f\n0,1,2,3,4,5,6\n1,-6,0,6,0,12,3\n");

    const flatOut = path.join(tmp, "run7a");
    const flatResult = await exportTraces({
      modelPath: cubeDir,
      layers: ["cube"],
      dataPath: csv,
      outDir: flatOut,
    });
    expect(flatResult.layerWidths).toEqual([6]);
    const flatTrace = readTrace(path.join(flatOut, "cube.atrc"));
    expect([...flatTrace.values.subarray(0, 6)]).toEqual([1, 2, 3, 4, 5, 6]);
    expect([...flatTrace.values.subarray(6, 12)]).toEqual([-6, 0, 6, 0, 12, 3]);

    const avgOut = path.join(tmp, "run7b");
    const avgResult = await exportTraces({
      modelPath: cubeDir,
      layers: ["cube"],
      dataPath: csv,
      outDir: avgOut,
      globalAverage: true,
    });
    expect(avgResult.layerWidths).toEqual([2]);
    const avgTrace = readTrace(path.join(avgOut, "cube.atrc"));
    expect(avgTrace.values[0]).toBeCloseTo((1 + 3 + 5) / 3, 5);
    expect(avgTrace.values[1]).toBeCloseTo((2 + 4 + 6) / 3, 5);
    expect(avgTrace.values[2]).toBeCloseTo((-6 + 6 + 12) / 3, 5);
    expect(avgTrace.values[3]).toBeCloseTo((0 + 0 + 3) / 3, 5);
  });

  it("exposes tap lookup failures from buildTapModel directly", async () => {
    const model = await loadModel(modelDir);
    expect(() => buildTapModel(model, [])).toThrow(/at least one/);
    expect(() => buildTapModel(model, ["hidden", "hidden"])).toThrow(/duplicate/);
    const tap = buildTapModel(model, ["head"]);
    expect(tap.tapIndices).toEqual([0]);
    expect(tap.predictionIndex).toBe(0);
  });
});

const pythonOk =
  spawnSync("python3", ["-c", "import dsadetect"], { encoding: "utf8" }).status === 0;

describe.skipIf(!pythonOk)("format closure with the consumer toolkit", () => {
  it("exported files load and score without validation errors", async () => {
    const out = path.join(tmp, "closure");
    await exportTraces({
      modelPath: modelDir,
      layers: ["hidden"],
      dataPath: dataCsv,
      outDir: out,
    });
    const script = path.join(tmp, "closure.py");
    fs.writeFileSync(
      script,
      [
        "import json, sys",
        "from dsadetect.traceio import load_trace_file, load_labels",
        "from dsadetect.traces import LabeledTraceSet",
        "from dsadetect.dsa import DsaConfig, DsaVariant, batch_dsa",
        "ts = load_trace_file(sys.argv[1])",
        "true, pred = load_labels(sys.argv[2], ts.n_samples)",
        "labeled = LabeledTraceSet(ts, true, pred, n_classes=2)",
        "scores = batch_dsa(labeled, labeled, DsaConfig(variant=DsaVariant.DSA1))",
        "print(json.dumps({",
        "    'n': int(ts.n_samples), 'd': int(ts.n_neurons),",
        "    'layer': ts.layer_name,",
        "    'row0': ts.traces[0].tolist(),",
        "    'true': true.tolist(), 'pred': pred.tolist(),",
        "    'n_scores': len(scores),",
        "    'scores_zero': all(s.value == 0.0 for s in scores),",
        "}))",
      ].join("\n"),
    );
    const run = spawnSync(
      "python3",
      [script, path.join(out, "hidden.atrc"), path.join(out, "labels.albl")],
      { encoding: "utf8" },
    );
    expect(run.stderr).toBe("");
    expect(run.status).toBe(0);
    const parsed = JSON.parse(run.stdout);
    expect(parsed.n).toBe(5);
    expect(parsed.d).toBe(3);
    expect(parsed.layer).toBe("hidden");
    expect(parsed.row0).toEqual([0, 0, 100]);
    expect(parsed.true).toEqual(TRUE_LABELS);
    expect(parsed.pred).toEqual(PREDICTED);
    expect(parsed.n_scores).toBe(5);
    // Each query coincides with its own training row, so the same-class
    // distance is zero and the dominance rule pins every score to 0.0.
    expect(parsed.scores_zero).toBe(true);
  });
});
