import { ServiceClient } from "./api";
import { createApp } from "./app";

// Same-origin by default; override with ?service=http://host:port for a
// service running elsewhere.
const params = new URLSearchParams(window.location.search);
const client = new ServiceClient(params.get("service") ?? "");

const app = createApp(document, client);
app.start().catch((err) => {
  const banner = document.getElementById("form-error");
  if (banner) banner.textContent = `service unreachable: ${err}`;
});
