#!/usr/bin/env node
/** CLI: render one figure kind from granflow CSV output to an SVG file.
 *
 *   render --kind K --in CSV[,CSV...] --out PATH [--normalize]
 *
 * Strictly a view of the CSV data: no physics is recomputed here, and the
 * output is deterministic for identical inputs.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";
import * as echarts from "echarts";
import { readCsv } from "./csv";
import { FIGURE_KINDS, FigureKind, buildFigure } from "./figures";

const WIDTH = 900;
const HEIGHT = 620;

export function renderSvg(kind: FigureKind, inputPaths: string[],
                          normalize: boolean): string {
  const inputs = inputPaths.map(readCsv);
  const option = buildFigure({ kind, inputs, normalize });
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: WIDTH,
    height: HEIGHT,
  });
  try {
    chart.setOption(option);
    return chart.renderToSVGString();
  } finally {
    chart.dispose();
  }
}

function main(): number {
  const { values } = parseArgs({
    options: {
      kind: { type: "string" },
      in: { type: "string" },
      out: { type: "string" },
      normalize: { type: "boolean", default: false },
    },
  });
  const kind = values.kind as FigureKind | undefined;
  if (!kind || !(FIGURE_KINDS as readonly string[]).includes(kind)) {
    process.stderr.write(
      `--kind must be one of: ${FIGURE_KINDS.join(", ")}\n`);
    return 2;
  }
  if (!values.in || !values.out) {
    process.stderr.write("--in CSV[,CSV...] and --out PATH are required\n");
    return 2;
  }
  const inputPaths = values.in.split(",").map((s) => s.trim()).filter(Boolean);
  try {
    const svg = renderSvg(kind, inputPaths, values.normalize ?? false);
    fs.mkdirSync(path.dirname(path.resolve(values.out)), { recursive: true });
    fs.writeFileSync(values.out, svg, "utf8");
  } catch (err) {
    process.stderr.write(`render failed: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

if (require.main === module) {
  // echarts' zrender keeps a ticker alive; exit explicitly once the file is
  // written so the CLI terminates promptly
  process.exit(main());
}
