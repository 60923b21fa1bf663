/**
 * chemotax-plots <kind> --input FILE [--input FILE2] --output FILE.svg
 *                [--column NAME] [--log-y] [--title TEXT]
 *                [--width N] [--height N] [--scan-index K]
 *
 * Kinds: decay | masses | bubble-fit | lambda-sweep.
 * Exit codes: 0 ok, 1 render/input error, 2 usage error.
 */

import { FigureKind, FigureSpec, render } from "./figures.js";

const KINDS: FigureKind[] = ["decay", "masses", "bubble-fit", "lambda-sweep"];

export function parseArgs(argv: string[]): FigureSpec {
  const [kind, ...rest] = argv;
  if (!KINDS.includes(kind as FigureKind)) {
    throw new UsageError(`expected a figure kind (${KINDS.join(" | ")}), got ${kind}`);
  }
  const inputs: string[] = [];
  let output = "";
  const options: NonNullable<FigureSpec["options"]> = {};
  for (let k = 0; k < rest.length; k++) {
    const arg = rest[k];
    const next = (): string => {
      if (k + 1 >= rest.length) throw new UsageError(`${arg} needs a value`);
      return rest[++k];
    };
    switch (arg) {
      case "--input": inputs.push(next()); break;
      case "--output": output = next(); break;
      case "--column": options.column = next(); break;
      case "--log-y": options.logY = true; break;
      case "--title": options.title = next(); break;
      case "--width": options.width = Number(next()); break;
      case "--height": options.height = Number(next()); break;
      case "--scan-index": options.scanIndex = Number(next()); break;
      default: throw new UsageError(`unknown argument ${arg}`);
    }
  }
  if (inputs.length === 0) throw new UsageError("--input is required");
  if (!output) throw new UsageError("--output is required");
  return { kind: kind as FigureKind, inputs, output, options };
}

export class UsageError extends Error {}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    render(spec);
    console.log(`wrote ${spec.output}`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`usage error: ${err.message}`);
      return 2;
    }
    console.error(`render error: ${(err as Error).message}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
