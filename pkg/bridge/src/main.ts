import { createApp } from "./server";
import { configFromEnv, HttpProvider } from "./provider";

const port = Number(process.env.BRIDGE_PORT ?? 8090);
const app = createApp({ provider: new HttpProvider(configFromEnv()) });
app.listen(port, () => {
  console.log(JSON.stringify({ serving: `http://127.0.0.1:${port}` }));
});
