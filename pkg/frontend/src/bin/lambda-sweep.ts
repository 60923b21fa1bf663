/** Render a lambda-sweep figure: lambda-sweep.js --input FILE --output FILE.svg ... */
import { main } from "../cli.js";

process.exit(main(["lambda-sweep", ...process.argv.slice(2)]));
