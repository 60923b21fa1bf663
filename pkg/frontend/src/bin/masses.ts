/** Render a masses figure: masses.js --input FILE --output FILE.svg ... */
import { main } from "../cli.js";

process.exit(main(["masses", ...process.argv.slice(2)]));
