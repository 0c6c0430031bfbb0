#!/usr/bin/env node
import { readFileSync, realpathSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { pretaggedAdapter } from "./adapter.js";
import { featurizeLines } from "./pipeline.js";

const USAGE = `usage: featurize --in <tagged.jsonl> --out <corpus.jsonl> [--concurrency N]

Convert pre-tagged sentences (one JSON document per line, with "tokens",
"pos", and "entities" span annotations) into the bag-of-feature corpus
format. "-" means standard input / standard output. Run statistics are
written to standard error as a single JSON line.`;

export async function main(argv: string[]): Promise<number> {
  let values: { in?: string; out?: string; concurrency?: string; help?: boolean };
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        in: { type: "string" },
        out: { type: "string" },
        concurrency: { type: "string", default: "8" },
        help: { type: "boolean", short: "h", default: false },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    console.error(USAGE);
    return 2;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  if (!values.in || !values.out) {
    console.error("--in and --out are required");
    console.error(USAGE);
    return 2;
  }
  const concurrency = Number(values.concurrency);
  if (!Number.isInteger(concurrency) || concurrency < 1) {
    console.error(`--concurrency must be a positive integer, got ${values.concurrency}`);
    return 2;
  }

  let text: string;
  try {
    text = values.in === "-" ? readFileSync(0, "utf8") : readFileSync(values.in, "utf8");
  } catch (err) {
    console.error(`cannot read ${values.in}: ${err instanceof Error ? err.message : String(err)}`);
    return 3;
  }

  const { lines, stats } = await featurizeLines(text.split("\n"), pretaggedAdapter, {
    concurrency,
    onWarning: (message) => console.error(`warning: skipping document (${message})`),
  });

  const output = lines.map((line) => line + "\n").join("");
  try {
    if (values.out === "-") {
      process.stdout.write(output);
    } else {
      writeFileSync(values.out, output);
    }
  } catch (err) {
    console.error(`cannot write ${values.out}: ${err instanceof Error ? err.message : String(err)}`);
    return 3;
  }
  console.error(JSON.stringify(stats));
  return 0;
}

const invokedAsScript =
  process.argv[1] !== undefined &&
  import.meta.url === pathToFileURL(realpathSync(process.argv[1])).href;

if (invokedAsScript) {
  main(process.argv.slice(2)).then(
    (code) => {
      process.exitCode = code;
    },
    (err) => {
      console.error(err instanceof Error ? (err.stack ?? err.message) : String(err));
      process.exitCode = 1;
    },
  );
}
