/** CLI: node dist/cli.js --config config/default.json [--out DIR] */

import * as fs from "node:fs";

import { ExportConfig, runExport } from "./export.js";

function parseArgs(argv: string[]): { config: string; out?: string } {
  let config: string | undefined;
  let out: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--config") config = argv[++i];
    else if (argv[i] === "--out") out = argv[++i];
    else {
      console.error(`unknown argument: ${argv[i]}`);
      process.exit(2);
    }
  }
  if (!config) {
    console.error("usage: node dist/cli.js --config <json> [--out <dir>]");
    process.exit(2);
  }
  return { config, out };
}

const args = parseArgs(process.argv.slice(2));
const config: ExportConfig = JSON.parse(fs.readFileSync(args.config, "utf-8"));
if (args.out) config.outputDir = args.out;

const results = runExport(config);
for (const r of results) {
  console.log(
    `seed ${r.seed}: train acc ${r.trainAccuracy.toFixed(3)}, ` +
      `val acc ${r.validationAccuracy.toFixed(3)}, final loss ${r.finalLoss.toFixed(4)}`,
  );
  for (const [split, dir] of Object.entries(r.bundleDirs)) {
    console.log(`  ${split}: ${dir}`);
  }
}
