/** Layers-model loading and tap-model construction.
 *
 * Models are the standard layers-model layout: a `model.json` holding the
 * topology plus a weights manifest, with weight values in sibling binary
 * files. Loading goes through a filesystem IO handler because the plain
 * browser bundle has no `file://` scheme support.
 */

import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { MissingFileError, IoError, UnknownLayerError, ValidationError } from "./errors";

interface WeightsManifestGroup {
  paths: string[];
  weights: tf.io.WeightsManifestEntry[];
}

interface ModelJson {
  modelTopology: {};
  format?: string;
  generatedBy?: string;
  convertedBy?: string;
  weightsManifest: WeightsManifestGroup[];
}

function concatBuffers(parts: ArrayBuffer[]): ArrayBuffer {
  const total = parts.reduce((acc, p) => acc + p.byteLength, 0);
  const out = new Uint8Array(total);
  let offset = 0;
  for (const p of parts) {
    out.set(new Uint8Array(p), offset);
    offset += p.byteLength;
  }
  return out.buffer;
}

function readBinary(filePath: string): ArrayBuffer {
  let buf: Buffer;
  try {
    buf = fs.readFileSync(filePath);
  } catch (err) {
    throw new IoError(`cannot read ${filePath}: ${(err as Error).message}`);
  }
  const out = new ArrayBuffer(buf.byteLength);
  new Uint8Array(out).set(buf);
  return out;
}

/** Resolve a model reference to its model.json path. */
export function resolveModelJson(modelPath: string): string {
  if (!fs.existsSync(modelPath)) {
    throw new MissingFileError(`model not found: ${modelPath}`);
  }
  if (fs.statSync(modelPath).isDirectory()) {
    const candidate = path.join(modelPath, "model.json");
    if (!fs.existsSync(candidate)) {
      throw new MissingFileError(`no model.json inside directory: ${modelPath}`);
    }
    return candidate;
  }
  return modelPath;
}

function diskLoadHandler(jsonPath: string): tf.io.IOHandler {
  return {
    load: async (): Promise<tf.io.ModelArtifacts> => {
      let parsed: ModelJson;
      try {
        parsed = JSON.parse(fs.readFileSync(jsonPath, "utf8"));
      } catch (err) {
        throw new IoError(`cannot parse ${jsonPath}: ${(err as Error).message}`);
      }
      if (!parsed.modelTopology || !Array.isArray(parsed.weightsManifest)) {
        throw new ValidationError(`${jsonPath} is not a layers-model manifest`);
      }
      const dir = path.dirname(jsonPath);
      const weightSpecs: tf.io.WeightsManifestEntry[] = [];
      const shards: ArrayBuffer[] = [];
      for (const group of parsed.weightsManifest) {
        weightSpecs.push(...group.weights);
        for (const rel of group.paths) {
          shards.push(readBinary(path.join(dir, rel)));
        }
      }
      return {
        modelTopology: parsed.modelTopology,
        format: parsed.format,
        generatedBy: parsed.generatedBy,
        convertedBy: parsed.convertedBy,
        weightSpecs,
        weightData: concatBuffers(shards),
      };
    },
  };
}

/** IO handler that saves a model as model.json + weights.bin in a directory. */
export function diskSaveHandler(outDir: string): tf.io.IOHandler {
  return {
    save: async (artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> => {
      fs.mkdirSync(outDir, { recursive: true });
      const weightData = artifacts.weightData;
      const flat: ArrayBuffer = Array.isArray(weightData)
        ? concatBuffers(weightData as ArrayBuffer[])
        : (weightData as ArrayBuffer);
      const manifest: WeightsManifestGroup[] = [
        { paths: ["weights.bin"], weights: artifacts.weightSpecs ?? [] },
      ];
      const json: ModelJson = {
        modelTopology: artifacts.modelTopology as {},
        format: artifacts.format ?? undefined,
        generatedBy: artifacts.generatedBy ?? undefined,
        convertedBy: artifacts.convertedBy ?? undefined,
        weightsManifest: manifest,
      };
      try {
        fs.writeFileSync(path.join(outDir, "model.json"), JSON.stringify(json));
        fs.writeFileSync(path.join(outDir, "weights.bin"), Buffer.from(flat));
      } catch (err) {
        throw new IoError(`cannot write model to ${outDir}: ${(err as Error).message}`);
      }
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON",
        },
      };
    },
  };
}

/** Load a layers model from a model.json path or its directory. */
export async function loadModel(modelPath: string): Promise<tf.LayersModel> {
  const jsonPath = resolveModelJson(modelPath);
  return tf.loadLayersModel(diskLoadHandler(jsonPath));
}

export interface TapModel {
  /** Model whose outputs are the tap tensors plus, last, the prediction head. */
  model: tf.LayersModel;
  /** Index of each requested tap in the output list, in request order. */
  tapIndices: number[];
  /** Index of the prediction-head output used for argmax labels. */
  predictionIndex: number;
}

/**
 * Build a model that exposes the named layers' outputs alongside the
 * prediction head. When a tap is the prediction head itself its tensor is
 * not duplicated; both roles share one output slot.
 */
export function buildTapModel(model: tf.LayersModel, layerNames: string[]): TapModel {
  if (layerNames.length === 0) {
    throw new ValidationError("at least one layer name is required");
  }
  const seen = new Set<string>();
  for (const name of layerNames) {
    if (seen.has(name)) {
      throw new ValidationError(`duplicate layer name: ${name}`);
    }
    seen.add(name);
  }
  const available = model.layers.map((l) => l.name);
  const outputs: tf.SymbolicTensor[] = [];
  const tapIndices: number[] = [];
  for (const name of layerNames) {
    const layer = model.layers.find((l) => l.name === name);
    if (layer === undefined) {
      throw new UnknownLayerError(
        `unknown layer ${name}; available: ${available.join(", ")}`,
      );
    }
    tapIndices.push(outputs.length);
    outputs.push(layer.output as tf.SymbolicTensor);
  }
  const head = model.outputs[0];
  let predictionIndex = outputs.findIndex((t) => t.name === head.name);
  if (predictionIndex < 0) {
    predictionIndex = outputs.length;
    outputs.push(head);
  }
  const tapModel = tf.model({ inputs: model.inputs, outputs });
  return { model: tapModel, tapIndices, predictionIndex };
}

/**
 * Collapse a tap activation to one row per sample.
 *
 * Rank-2 tensors pass through; higher ranks are flattened row-major, or
 * averaged over all non-channel spatial axes when `globalAverage` is set.
 */
export function flattenActivation(t: tf.Tensor, globalAverage: boolean): tf.Tensor {
  if (t.rank < 2) {
    return t.reshape([t.shape[0] ?? -1, 1]);
  }
  if (t.rank === 2) {
    return t;
  }
  if (globalAverage) {
    const spatialAxes = Array.from({ length: t.rank - 2 }, (_, i) => i + 1);
    return t.mean(spatialAxes);
  }
  const batch = t.shape[0] as number;
  const width = t.size / batch;
  return t.reshape([batch, width]);
}
