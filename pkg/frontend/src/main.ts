import { readFileSync } from "fs";
import yargs from "yargs";
import { SchemaError } from "./csv";
import { PlotJob, render } from "./render";

export function main(argv: string[]): number {
  const args = yargs(argv)
    .option("job", { type: "string", demandOption: true, describe: "path to the plot job JSON" })
    .strict()
    .parseSync();
  let job: PlotJob;
  try {
    job = JSON.parse(readFileSync(args.job, "utf8"));
  } catch (e) {
    console.error(`job error: ${(e as Error).message}`);
    return 2;
  }
  try {
    render(job);
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 1;
    }
    console.error(`render error: ${(e as Error).message}`);
    return 1;
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
