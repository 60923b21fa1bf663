/** Render a decay figure: decay.js --input FILE --output FILE.svg ... */
import { main } from "../cli.js";

process.exit(main(["decay", ...process.argv.slice(2)]));
