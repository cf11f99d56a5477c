#!/usr/bin/env node
/** plots render --figure ID --in DIR --out FILE */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { MissingColumnError } from "./csv.js";
import { FIGURE_IDS, FigureId, renderFigure } from "./figures.js";

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "render") {
    console.error(`usage: plots render --figure ID --in DIR --out FILE`);
    console.error(`figure ids: ${FIGURE_IDS.join(", ")}`);
    return 2;
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: rest,
      options: {
        figure: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  const figure = values.figure as string | undefined;
  const inDir = values.in;
  const outFile = values.out;
  if (!figure || !inDir || !outFile) {
    console.error("render requires --figure, --in and --out");
    return 2;
  }
  if (!(FIGURE_IDS as readonly string[]).includes(figure)) {
    console.error(`unknown figure '${figure}'; choose from ${FIGURE_IDS.join(", ")}`);
    return 2;
  }
  try {
    const svg = renderFigure(figure as FigureId, inDir);
    writeFileSync(outFile, svg);
  } catch (err) {
    if (err instanceof MissingColumnError) {
      console.error(`missing column: ${err.column} (${err.file})`);
      return 3;
    }
    console.error(String(err));
    return 1;
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
