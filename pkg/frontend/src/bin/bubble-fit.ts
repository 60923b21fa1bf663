/** Render a bubble-fit figure: bubble-fit.js --input FILE --output FILE.svg ... */
import { main } from "../cli.js";

process.exit(main(["bubble-fit", ...process.argv.slice(2)]));
