/** Batch export of per-layer activation traces and label files.
 *
 * Runs a dataset through a layers model batch by batch, captures the
 * post-activation output of each requested layer, and writes one binary
 * trace file per layer plus one label file pairing true labels with the
 * model's argmax predictions. Row order always matches dataset order.
 */

import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { loadDataset } from "./dataset";
import { IoError, ShapeMismatchError, ValidationError } from "./errors";
import { writeLabelFile, writeTraceFile } from "./format";
import { buildTapModel, flattenActivation, loadModel } from "./model";

export const DEFAULT_BATCH_SIZE = 256;

export interface ExportSpec {
  /** Path to model.json or the directory containing it. */
  modelPath: string;
  /** Layer names to capture, in output order. */
  layers: string[];
  /** Path to the label-first CSV dataset. */
  dataPath: string;
  /** Directory that receives the trace and label files. */
  outDir: string;
  /** Rows per forward pass; defaults to DEFAULT_BATCH_SIZE. */
  batchSize?: number;
  /** Average spatial axes of rank>2 activations instead of flattening. */
  globalAverage?: boolean;
}

export interface ExportResult {
  /** Written trace files, one per requested layer, in request order. */
  traceFiles: string[];
  /** Written label file with (true, predicted) pairs. */
  labelFile: string;
  nSamples: number;
  /** Neuron count of each exported layer, in request order. */
  layerWidths: number[];
  /** Fraction of rows where the argmax prediction matches the true label. */
  accuracy: number;
}

function inputDims(model: tf.LayersModel): number[] {
  const shape = model.inputs[0].shape;
  const dims = shape.slice(1);
  const fixed: number[] = [];
  for (const d of dims) {
    if (d === null || d === undefined || d < 0) {
      throw new ValidationError(
        `model input shape ${JSON.stringify(shape)} has dynamic non-batch dimensions`,
      );
    }
    fixed.push(d);
  }
  if (fixed.length === 0) {
    throw new ValidationError("model input must have at least one non-batch dimension");
  }
  return fixed;
}

/** Run the export described by `spec`, returning the written file paths. */
export async function exportTraces(spec: ExportSpec): Promise<ExportResult> {
  const batchSize = spec.batchSize ?? DEFAULT_BATCH_SIZE;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new ValidationError(`batch size must be a positive integer, got ${batchSize}`);
  }
  const globalAverage = spec.globalAverage ?? false;

  const dataset = loadDataset(spec.dataPath);
  const model = await loadModel(spec.modelPath);
  const dims = inputDims(model);
  const flatWidth = dims.reduce((a, b) => a * b, 1);
  if (dataset.nFeatures !== flatWidth) {
    throw new ShapeMismatchError(
      `dataset rows have ${dataset.nFeatures} features but the model input ` +
        `${JSON.stringify(model.inputs[0].shape)} needs ${flatWidth}`,
    );
  }

  const tap = buildTapModel(model, spec.layers);
  const n = dataset.nSamples;
  const nLayers = spec.layers.length;
  const layerWidths = new Array<number>(nLayers).fill(0);
  const traceBuffers = new Array<Float32Array | null>(nLayers).fill(null);
  const predicted = new Uint32Array(n);

  for (let startRow = 0; startRow < n; startRow += batchSize) {
    const batchN = Math.min(batchSize, n - startRow);
    const slice = dataset.features.subarray(
      startRow * flatWidth,
      (startRow + batchN) * flatWidth,
    );
    const { tapData, predData } = tf.tidy(() => {
      const xs = tf.tensor(slice, [batchN, ...dims], "float32");
      const raw = tap.model.predict(xs, { batchSize: batchN });
      const outs = Array.isArray(raw) ? raw : [raw];
      const flats = tap.tapIndices.map((i) => flattenActivation(outs[i], globalAverage));
      return {
        tapData: flats.map((t) => t.dataSync() as Float32Array),
        predData: tf.argMax(outs[tap.predictionIndex], -1).dataSync(),
      };
    });
    for (let j = 0; j < nLayers; j++) {
      const data = tapData[j];
      if (traceBuffers[j] === null) {
        if (data.length % batchN !== 0) {
          throw new ShapeMismatchError(
            `layer ${spec.layers[j]} produced ${data.length} values for ${batchN} rows`,
          );
        }
        layerWidths[j] = data.length / batchN;
        traceBuffers[j] = new Float32Array(n * layerWidths[j]);
      }
      if (data.length !== batchN * layerWidths[j]) {
        throw new ShapeMismatchError(
          `layer ${spec.layers[j]} width changed between batches`,
        );
      }
      traceBuffers[j]!.set(data, startRow * layerWidths[j]);
    }
    for (let i = 0; i < batchN; i++) {
      predicted[startRow + i] = predData[i];
    }
  }

  try {
    fs.mkdirSync(spec.outDir, { recursive: true });
  } catch (err) {
    throw new IoError(`cannot create ${spec.outDir}: ${(err as Error).message}`);
  }
  const traceFiles: string[] = [];
  for (let j = 0; j < nLayers; j++) {
    const filePath = path.join(spec.outDir, `${spec.layers[j]}.atrc`);
    writeTraceFile(filePath, traceBuffers[j]!, n, layerWidths[j]);
    traceFiles.push(filePath);
  }
  const labelFile = path.join(spec.outDir, "labels.albl");
  writeLabelFile(labelFile, dataset.labels, predicted);

  let correct = 0;
  for (let i = 0; i < n; i++) {
    if (predicted[i] === dataset.labels[i]) {
      correct += 1;
    }
  }
  return {
    traceFiles,
    labelFile,
    nSamples: n,
    layerWidths,
    accuracy: correct / n,
  };
}
