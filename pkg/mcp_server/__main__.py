"""python -m mcp_server starts the probability-geometry MCP server on STDIO."""
from mcp_server.server import main

if __name__ == "__main__":
    main()
