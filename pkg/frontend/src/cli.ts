#!/usr/bin/env node
/** Command-line entry point.
 *
 * `tracexport export --model m/ --layers a b --data d.csv --out traces/`
 * runs the dataset through the model and writes one trace file per layer
 * plus a label file. Exit codes: 0 success, 2 missing input or IO failure,
 * 3 invalid arguments or model/data mismatch.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  IoError,
  MissingFileError,
  ShapeMismatchError,
  UnknownLayerError,
  ValidationError,
} from "./errors";
import { DEFAULT_BATCH_SIZE, ExportResult, exportTraces } from "./export";

export const E_OK = 0;
export const E_IO = 2;
export const E_VALIDATION = 3;

/** Map an error to the process exit code it should produce. */
export function exitCodeFor(err: unknown): number {
  if (err instanceof MissingFileError || err instanceof IoError) {
    return E_IO;
  }
  if (
    err instanceof UnknownLayerError ||
    err instanceof ShapeMismatchError ||
    err instanceof ValidationError
  ) {
    return E_VALIDATION;
  }
  return 1;
}

/** Parse arguments, run the requested command, and return the exit code. */
export async function main(argv: string[]): Promise<number> {
  let result: ExportResult | null = null;
  const parser = yargs(argv)
    .scriptName("tracexport")
    .command(
      "export",
      "run a dataset through a model and write trace/label files",
      (y) =>
        y
          .option("model", {
            type: "string",
            demandOption: true,
            describe: "model.json path or the directory holding it",
          })
          .option("layers", {
            type: "string",
            array: true,
            demandOption: true,
            describe: "layer names to capture, in output order",
          })
          .option("data", {
            type: "string",
            demandOption: true,
            describe: "label-first CSV dataset (label,f0,f1,...)",
          })
          .option("out", {
            type: "string",
            demandOption: true,
            describe: "directory that receives the trace and label files",
          })
          .option("batch-size", {
            type: "number",
            default: DEFAULT_BATCH_SIZE,
            describe: "rows per forward pass",
          })
          .option("global-average", {
            type: "boolean",
            default: false,
            describe: "average spatial axes of rank>2 activations instead of flattening",
          }),
      async (args) => {
        result = await exportTraces({
          modelPath: args.model,
          layers: args.layers as string[],
          dataPath: args.data,
          outDir: args.out,
          batchSize: args["batch-size"],
          globalAverage: args["global-average"],
        });
      },
    )
    .demandCommand(1, "a command is required")
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new ValidationError(msg ?? "invalid arguments");
    });

  try {
    await parser.parseAsync();
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return exitCodeFor(err);
  }
  if (result !== null) {
    const r = result as ExportResult;
    for (const f of r.traceFiles) {
      process.stdout.write(`wrote ${f}\n`);
    }
    process.stdout.write(`wrote ${r.labelFile}\n`);
    process.stdout.write(
      `exported ${r.nSamples} rows, accuracy ${r.accuracy.toFixed(4)}\n`,
    );
  }
  return E_OK;
}

if (require.main === module) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
